import math
from itertools import combinations_with_replacement

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import oracle_transform, random_fixed_n_state, toy_pair
from dephase_lab.discrimination import (classify_patterns, conditional_mode_check,
                                        falling_factorial, highest_order_products,
                                        normal_ordered_moment, optimal_form_check,
                                        orthogonal_hierarchy, supports_disjoint,
                                        transformed_pair, usd_hierarchy, usd_report)
from dephase_lab.fock import (PureState, apply_lowering, basis_state, coherent_product_state,
                              inner_product)
from dephase_lab.linop import beam_splitter_50_50, haar_random, identity


def lowered_by_output_mode(state: PureState, u, j) -> PureState:
    """c_j |state> with c_j = sum_i U[j, i] a_i acting on the input modes."""
    terms = {}
    for i in range(state.n_modes):
        for p, a in apply_lowering(state, [i]).terms.items():
            terms[p] = terms.get(p, 0j) + u[j, i] * a
    return PureState(state.n_modes, terms)


def transported_moment(u, plus, minus, modes):
    a, b = plus, minus
    for j in modes:
        a, b = lowered_by_output_mode(a, u, j), lowered_by_output_mode(b, u, j)
    return inner_product(a, b)


def test_toy_moments(toy):
    bs = beam_splitter_50_50()
    assert normal_ordered_moment(bs, *toy, [0]) == pytest.approx(1 / 3, abs=1e-12)
    assert normal_ordered_moment(bs, *toy, [1]) == pytest.approx(1 / 3, abs=1e-12)
    assert abs(normal_ordered_moment(bs, *toy, [0, 0])) < 1e-12
    assert normal_ordered_moment(bs, *toy, [0, 1]) == pytest.approx(1 / 3, abs=1e-12)
    with pytest.raises(ValueError):
        normal_ordered_moment(bs, *toy, [2])


@pytest.mark.parametrize("seed", range(6))
def test_moments_match_operator_transport(seed):
    rng = np.random.default_rng(seed)
    modes = 2 + seed % 2
    plus, minus = random_fixed_n_state(rng, modes, 3), random_fixed_n_state(rng, modes, 3)
    u = haar_random(modes, seed)
    for order in (1, 2, 3):
        for ms in combinations_with_replacement(range(modes), order):
            want = transported_moment(u.matrix, plus, minus, ms)
            assert normal_ordered_moment(u, plus, minus, ms) == pytest.approx(want, abs=1e-12)


def test_classification_of_toy(toy):
    out = transformed_pair(beam_splitter_50_50(), *toy)
    cls = classify_patterns(*out)
    assert cls.conclusive_plus == ((2, 0),)
    assert cls.conclusive_minus == ((0, 2),)
    assert cls.ambiguous == ((1, 1),)


def test_usd_report_toy_optimal(toy):
    rep = usd_report(beam_splitter_50_50(), *toy)
    assert rep.prob_fail_circuit == pytest.approx(1 / 3, abs=1e-12)
    assert rep.prob_success_circuit == pytest.approx(2 / 3, abs=1e-12)
    assert rep.optimal is True
    assert math.fsum(c.contribution for c in rep.contributions) == rep.prob_fail_circuit
    assert rep.to_dict()["optimal"] is True


def test_usd_report_identity_fails(toy):
    rep = usd_report(identity(2), *toy)
    assert rep.prob_fail_circuit == pytest.approx(1.0)
    assert rep.optimal is False


def test_usd_report_priors(toy):
    rep = usd_report(beam_splitter_50_50(), *toy, priors=(0.7, 0.3))
    # both outputs put 1/3 on the ambiguous pattern
    assert rep.prob_fail_circuit == pytest.approx(1 / 3)
    assert rep.optimal is None and rep.prob_fail_optimal is None
    with pytest.raises(ValueError):
        usd_report(beam_splitter_50_50(), *toy, priors=(0.7, 0.7))


def test_usd_hierarchy_passes_for_optimal_toy(toy):
    rep = usd_hierarchy(beam_splitter_50_50(), *toy)
    assert rep.verdict
    assert {e.kind for e in rep.entries} == {"distinct", "repeated"}
    assert rep.sum_rule.ok
    assert rep.sum_rule.value == pytest.approx(2 / 3)
    assert rep.reference_phase == pytest.approx(0.0)


def test_usd_hierarchy_fails_in_infeasible_regime():
    plus, minus = toy_pair(0.55)
    assert not usd_hierarchy(beam_splitter_50_50(), plus, minus).verdict
    for seed in range(5):
        assert not usd_hierarchy(haar_random(2, seed), plus, minus).verdict


def test_usd_hierarchy_max_order(toy):
    rep = usd_hierarchy(beam_splitter_50_50(), *toy, max_order=1)
    assert {e.order for e in rep.entries} == {1}
    with pytest.raises(ValueError):
        usd_hierarchy(identity(2), basis_state([1, 0]), basis_state([0, 1]))


def test_falling_factorial():
    assert falling_factorial(4, 2) == 12
    assert falling_factorial(3, 3) == 6
    assert falling_factorial(2, 3) == 0
    assert falling_factorial(5, 0) == 1


def test_orthogonal_hierarchy():
    plus, minus = basis_state([1, 0]), basis_state([0, 1])
    good = orthogonal_hierarchy(identity(2), plus, minus)
    assert good.verdict and good.sufficient_alone_order == 1
    bad = orthogonal_hierarchy(beam_splitter_50_50(), plus, minus)
    assert not bad.verdict
    with pytest.raises(ValueError):
        orthogonal_hierarchy(identity(2), *toy_pair(2 / 3))


def test_conditional_mode_check_coherent():
    plus = coherent_product_state([0.7, 0.7])
    minus = coherent_product_state([-0.7, 0.7])
    for j in range(2):
        rep = conditional_mode_check(beam_splitter_50_50(), plus, minus, j, max_order=6)
        assert [e.order for e in rep.entries] == [1, 2, 3, 4, 5, 6]
        assert all(abs(e.value) < 1e-10 for e in rep.entries)
        assert rep.verdict
    with pytest.raises(ValueError):
        conditional_mode_check(beam_splitter_50_50(), plus, minus, 2)


def test_condition_csv_is_one_based(toy):
    text = usd_hierarchy(beam_splitter_50_50(), *toy).to_csv()
    lines = text.splitlines()
    assert lines[0] == "order,modes,value_re,value_im,modulus,bound,phase_ok,modulus_ok,vanishing"
    assert lines[1].startswith("1,1,")
    assert any(line.startswith("2,1 1,") and ",na," in line for line in lines)


def test_optimal_form(toy):
    good = optimal_form_check(*transformed_pair(beam_splitter_50_50(), *toy))
    assert good.amplitude_match and good.common_phase
    assert good.ambiguous == ((1, 1),)
    # behind the identity both patterns are ambiguous and the phases disagree
    bad = optimal_form_check(*transformed_pair(identity(2), *toy))
    assert bad.amplitude_match and not bad.common_phase


@pytest.mark.parametrize("seed", range(5))
def test_highest_order_matches_permanent_products(seed):
    rng = np.random.default_rng(seed)
    modes, n = 3, 2 + seed % 2
    plus, minus = random_fixed_n_state(rng, modes, n), random_fixed_n_state(rng, modes, n)
    u = haar_random(modes, seed)
    table = highest_order_products(u, plus, minus)
    op, om = oracle_transform(u.matrix, plus), oracle_transform(u.matrix, minus)
    for e in table.entries:
        product = np.conj(op.get(e.pattern, 0)) * om.get(e.pattern, 0)
        assert e.moment == pytest.approx(e.factor * product, abs=1e-10)
        assert e.consistent


def test_highest_order_zero_iff_disjoint(toy):
    plus, minus = basis_state([1, 0]), basis_state([0, 1])
    assert highest_order_products(identity(2), plus, minus).all_zero()
    assert supports_disjoint(*transformed_pair(identity(2), plus, minus))
    table = highest_order_products(beam_splitter_50_50(), plus, minus)
    assert not table.all_zero()
    assert not supports_disjoint(*transformed_pair(beam_splitter_50_50(), plus, minus))
    with pytest.raises(ValueError):
        highest_order_products(identity(2), basis_state([1, 0]), basis_state([1, 1]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 3), st.integers(1, 3))
def test_failure_never_beats_overlap(seed, modes, photons):
    rng = np.random.default_rng(seed)
    plus = random_fixed_n_state(rng, modes, photons)
    minus = random_fixed_n_state(rng, modes, photons)
    rep = usd_report(haar_random(modes, seed), plus, minus)
    assert rep.prob_fail_circuit >= abs(inner_product(plus, minus)) - 1e-10
    assert 0 <= rep.prob_fail_circuit <= 1 + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sum_rule_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    plus, minus = random_fixed_n_state(rng, 3, n), random_fixed_n_state(rng, 3, n)
    u = haar_random(3, seed)
    total = sum(normal_ordered_moment(u, plus, minus, [j]) for j in range(3))
    assert total == pytest.approx(n * inner_product(plus, minus), abs=1e-10)
