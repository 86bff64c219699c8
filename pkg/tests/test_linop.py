import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import oracle_transform, random_fixed_n_state
from dephase_lab.fock import basis_state, build_pure_state, coherent_product_state, inner_product
from dephase_lab.linop import (GivensParameterization, LinearCircuit, TransformPlan,
                               UnitarityError, beam_splitter_50_50, compose_from_givens,
                               decompose_to_givens, embed_with_vacuum, haar_random, identity,
                               mesh_order, transform, validate_unitary)


def test_toy_transform_matches_closed_form(toy):
    plus, minus = toy
    bs = beam_splitter_50_50()
    out_p, out_m = transform(bs, plus), transform(bs, minus)
    assert set(out_p.terms) == {(2, 0), (1, 1)}
    assert set(out_m.terms) == {(0, 2), (1, 1)}
    assert out_p.amplitude((2, 0)) == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert out_p.amplitude((1, 1)) == pytest.approx(math.sqrt(1 / 3), abs=1e-12)
    assert out_m.amplitude((0, 2)) == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert out_m.amplitude((1, 1)) == pytest.approx(math.sqrt(1 / 3), abs=1e-12)


def test_hong_ou_mandel():
    out = transform(beam_splitter_50_50(), basis_state([1, 1]))
    assert abs(out.amplitude((1, 1))) < 1e-15
    assert abs(out.amplitude((2, 0))) == pytest.approx(1 / math.sqrt(2))


def test_identity_is_trivial(toy):
    plus, _ = toy
    out = transform(identity(2), plus)
    assert set(out.terms) == set(plus.terms)
    for p, a in plus.terms.items():
        assert out.amplitude(p) == pytest.approx(a, abs=1e-15)


def test_single_photon_follows_matrix_columns():
    u = haar_random(3, 4).matrix
    psi = np.array([0.6, 0.0, 0.8j])
    state = build_pure_state(3, [((1, 0, 0), psi[0]), ((0, 0, 1), psi[2])])
    out = transform(LinearCircuit(u), state)
    want = u @ psi
    for j in range(3):
        pattern = tuple(int(k == j) for k in range(3))
        assert out.amplitude(pattern) == pytest.approx(want[j], abs=1e-14)


@pytest.mark.parametrize("seed", range(8))
def test_transform_matches_permanent_oracle(seed):
    rng = np.random.default_rng(seed)
    modes, photons = 2 + seed % 3, 1 + seed % 4
    state = random_fixed_n_state(rng, modes, photons, support=4)
    u = haar_random(modes, seed + 100).matrix
    out = transform(LinearCircuit(u), state)
    want = oracle_transform(u, state)
    for pattern in set(want) | set(out.terms):
        assert out.amplitude(pattern) == pytest.approx(want.get(pattern, 0), abs=1e-12)


def test_transform_preserves_inner_products():
    rng = np.random.default_rng(11)
    a = random_fixed_n_state(rng, 3, 3)
    b = random_fixed_n_state(rng, 3, 3)
    c = haar_random(3, 1)
    assert inner_product(transform(c, a), transform(c, b)) == pytest.approx(inner_product(a, b),
                                                                             abs=1e-12)


def test_transform_composes():
    rng = np.random.default_rng(12)
    s = random_fixed_n_state(rng, 3, 2)
    u1, u2 = haar_random(3, 2), haar_random(3, 3)
    two_step = transform(u2, transform(u1, s))
    one_step = transform(LinearCircuit(u2.matrix @ u1.matrix), s)
    for p in set(two_step.terms) | set(one_step.terms):
        assert two_step.amplitude(p) == pytest.approx(one_step.amplitude(p), abs=1e-12)


def test_coherent_states_stay_coherent():
    # a circuit maps |a> to |U a> for coherent amplitudes
    s = coherent_product_state([0.7, 0.7], tail_tol=1e-14)
    out = transform(beam_splitter_50_50(), s)
    ref = coherent_product_state([0.7 * math.sqrt(2), 0.0], tail_tol=1e-14)
    assert abs(inner_product(ref, out)) == pytest.approx(1.0, abs=1e-12)


def test_plan_reuses_structure():
    plus, minus = build_pure_state(2, [((2, 0), 1.0)]), build_pure_state(2, [((0, 2), 1.0)])
    plan = TransformPlan([plus, minus])
    for seed in range(3):
        u = haar_random(2, seed)
        p, m = plan.states(u.matrix)
        assert p == transform(u, plus)
        assert m == transform(u, minus)


def test_validate_unitary_rejects():
    with pytest.raises(UnitarityError) as info:
        validate_unitary([[1, 0], [0, 2]])
    assert info.value.deviation > 1
    with pytest.raises(ValueError):
        validate_unitary([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(ValueError):
        transform(identity(3), basis_state([1, 0]))


def test_haar_is_seeded_and_unitary():
    a, b = haar_random(4, 7), haar_random(4, 7)
    assert np.array_equal(a.matrix, b.matrix)
    assert np.allclose(a.matrix @ a.matrix.conj().T, np.eye(4), atol=1e-13)
    assert haar_random(1, 0).dim == 1


def test_embed_with_vacuum():
    c = embed_with_vacuum(beam_splitter_50_50(), 1)
    assert c.dim == 3 and c.matrix[2, 2] == 1
    s = embed_with_vacuum(basis_state([1, 1]), 2)
    assert s.patterns() == [(1, 1, 0, 0)]


def test_givens_single_rotation():
    c = compose_from_givens(GivensParameterization(2, (math.pi / 4,), (0.0, 0.0, 0.0)))
    r = 1 / math.sqrt(2)
    assert np.allclose(c.matrix, [[r, -r], [r, r]], atol=1e-15)


def test_givens_of_50_50():
    params = decompose_to_givens(beam_splitter_50_50())
    assert params.angles[0] == pytest.approx(math.pi / 4)
    assert np.allclose(compose_from_givens(params).matrix, beam_splitter_50_50().matrix, atol=1e-14)


def test_givens_counts_validated():
    with pytest.raises(ValueError):
        GivensParameterization(3, (0.1, 0.2), (0.0,) * 6)
    assert len(mesh_order(4)) == 6


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
def test_givens_round_trip(dim, seed):
    u = haar_random(dim, seed)
    params = decompose_to_givens(u)
    assert len(params.angles) == dim * (dim - 1) // 2
    assert all(0 <= t <= math.pi / 2 + 1e-15 for t in params.angles)
    back = compose_from_givens(params)
    assert np.max(np.abs(back.matrix - u.matrix)) < 1e-12
    again = GivensParameterization.from_vector(dim, params.to_vector())
    assert again == params


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_norm_preserved(seed):
    rng = np.random.default_rng(seed)
    modes = int(rng.integers(1, 4))
    s = random_fixed_n_state(rng, modes, int(rng.integers(0, 4)))
    out = transform(haar_random(modes, seed), s)
    assert out.norm_sq == pytest.approx(1.0, abs=1e-12)
