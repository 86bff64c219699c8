import numpy as np
import pytest

from dephase_lab import io as fio
from dephase_lab.fock import build_pure_state
from dephase_lab.linop import decompose_to_givens, haar_random
from dephase_lab.naimark import usd_povm


def test_state_round_trip_is_exact(tmp_path):
    s = build_pure_state(3, [((1, 1, 0), 0.1 + 0.3j), ((0, 0, 2), -0.7)]).normalize()
    path = tmp_path / "s.json"
    fio.dump_json(fio.state_to_dict(s), path)
    back = fio.read_state(path)
    assert back == s
    assert all(back.amplitude(p) == a for p, a in s.terms.items())


def test_coherent_state_file():
    s = fio.state_from_dict({"coherent": {"alphas": [[0.7, 0], [0.7, 0]], "tail_tol": 1e-12}})
    assert s.n_modes == 2 and s.meta["cutoff"] == 14


def test_circuit_and_givens_round_trip(tmp_path):
    c = haar_random(3, 1)
    path = tmp_path / "c.json"
    fio.dump_json(fio.circuit_to_dict(c), path)
    assert np.array_equal(fio.read_circuit(path).matrix, c.matrix)
    mesh = tmp_path / "m.json"
    fio.dump_json(fio.givens_to_dict(decompose_to_givens(c)), mesh)
    assert np.max(np.abs(fio.read_circuit(mesh).matrix - c.matrix)) < 1e-12


def test_povm_round_trip():
    povm = usd_povm(0.8, 0.6).povm
    back = fio.povm_from_dict(fio.povm_to_dict(povm))
    assert np.array_equal(back.elements, povm.elements)


@pytest.mark.parametrize("data", [
    {"terms": []},
    {"n_modes": 2, "terms": [{"pattern": [1], "re": 1.0}]},
    {"n_modes": 1, "terms": [{"pattern": [-1], "re": 1.0}]},
    {"coherent": {"alphas": [[0.1]]}},
])
def test_bad_states(data):
    with pytest.raises(ValueError):
        fio.state_from_dict(data)


def test_bad_circuits():
    with pytest.raises(ValueError):
        fio.circuit_from_dict({"dim": 2, "rows": [[[1, 0], [0, 0]]]})
    with pytest.raises(ValueError):
        fio.circuit_from_dict({"dim": 1, "rows": [[[2, 0]]]})
    with pytest.raises(ValueError):
        fio.circuit_from_dict({"dim": 1, "rows": [[[float("nan"), 0]]]})
    with pytest.raises(ValueError):
        fio.povm_from_dict({"signal_dim": 1, "elements": []})


def test_unreadable_file(tmp_path):
    with pytest.raises(fio.FormatError):
        fio.load_json(tmp_path / "missing.json")
