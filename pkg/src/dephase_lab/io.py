"""JSON file formats for states, circuits, Givens meshes, POVMs and reports.

Complex numbers are stored as ``[re, im]`` pairs (or ``re``/``im`` fields in
state terms). Floats are written with full precision so files round-trip
exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .fock import PureState, build_pure_state, coherent_product_state
from .linop import GivensParameterization, LinearCircuit, compose_from_givens, validate_unitary
from .naimark import PovmSet, validate_povm

SCHEMAS = """\
state:   {"n_modes": int, "terms": [{"pattern": [int, ...], "re": float, "im": float}, ...]}
         or {"coherent": {"alphas": [[re, im], ...], "tail_tol": float}}
circuit: {"dim": int, "rows": [[[re, im], ...], ...]}   (rows of U; column i is where
         a photon entering mode i goes)
givens:  {"dim": int, "angles": [float, ...], "phases": [float, ...]}
povm:    {"signal_dim": int, "elements": [{"vec": [[re, im], ...]}, ...]}
search:  {"n_modes": int, "restarts": int, "seed": int, "max_iter": int, "tol": float,
          "classification_tol": float, "ancillas": [{"label": str, "state": <state>}, ...]}
         (only n_modes is required; ancillas switches to a sweep)
"""


class FormatError(ValueError):
    """Raised when a file does not follow its schema."""


def _complex(pair) -> complex:
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise FormatError(f"expected [re, im], got {pair!r}")
    re, im = (float(x) for x in pair)
    if not (math.isfinite(re) and math.isfinite(im)):
        raise FormatError("non-finite complex entry")
    return complex(re, im)


def _pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _require(data, key, kind=None):
    if not isinstance(data, dict) or key not in data:
        raise FormatError(f"missing field {key!r}")
    value = data[key]
    if kind is not None and not isinstance(value, kind):
        raise FormatError(f"field {key!r} has the wrong type")
    return value


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def dump_json(data, path) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def state_from_dict(data: dict) -> PureState:
    if isinstance(data, dict) and "coherent" in data:
        coh = data["coherent"]
        alphas = [_complex(a) for a in _require(coh, "alphas", list)]
        tail = float(coh.get("tail_tol", 1e-12))
        return coherent_product_state(alphas, tail_tol=tail)
    n = _require(data, "n_modes", int)
    terms = []
    for t in _require(data, "terms", list):
        pattern = _require(t, "pattern", list)
        terms.append((pattern, complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))))
    try:
        return build_pure_state(n, terms)
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc


def state_to_dict(state: PureState) -> dict:
    return {
        "n_modes": state.n_modes,
        "terms": [{"pattern": list(p), "re": a.real, "im": a.imag} for p, a in state.items()],
    }


def circuit_from_dict(data: dict) -> LinearCircuit:
    dim = _require(data, "dim", int)
    rows = _require(data, "rows", list)
    matrix = np.array([[_complex(z) for z in row] for row in rows], dtype=complex)
    if matrix.shape != (dim, dim):
        raise FormatError(f"rows do not form a {dim}x{dim} matrix")
    return validate_unitary(matrix)


def circuit_to_dict(circuit: LinearCircuit) -> dict:
    return {"dim": circuit.dim, "rows": [[_pair(z) for z in row] for row in circuit.matrix]}


def givens_from_dict(data: dict) -> GivensParameterization:
    return GivensParameterization(_require(data, "dim", int),
                                  tuple(float(x) for x in _require(data, "angles", list)),
                                  tuple(float(x) for x in _require(data, "phases", list)))


def givens_to_dict(params: GivensParameterization) -> dict:
    return {"dim": params.dim, "angles": list(params.angles), "phases": list(params.phases)}


def povm_from_dict(data: dict) -> PovmSet:
    dim = _require(data, "signal_dim", int)
    elements = [[_complex(z) for z in _require(e, "vec", list)]
                for e in _require(data, "elements", list)]
    if not elements:
        raise FormatError("POVM has no elements")
    return validate_povm(elements, dim)


def povm_to_dict(povm: PovmSet) -> dict:
    return {"signal_dim": povm.signal_dim,
            "elements": [{"vec": [_pair(z) for z in row]} for row in povm.elements]}


def read_state(path) -> PureState:
    return state_from_dict(load_json(path))


def read_circuit(path) -> LinearCircuit:
    data = load_json(path)
    if isinstance(data, dict) and "angles" in data:
        return compose_from_givens(givens_from_dict(data))
    return circuit_from_dict(data)


def read_povm(path) -> PovmSet:
    return povm_from_dict(load_json(path))
