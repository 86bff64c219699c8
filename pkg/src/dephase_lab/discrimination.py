"""Unambiguous discrimination of two pure states behind a linear circuit.

Covers the classification of output patterns into conclusive and ambiguous
ones, the circuit failure probability, and the hierarchies of necessary
conditions built from normal-ordered moments

    <chi+| c_j1^dag ... c_jr^dag c_j1 ... c_jr |chi->

which equal the same moments of the output states with the bare a_j.

Mode indices are 0-based throughout the library.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Sequence

from .fock import ComplexTolerance, PureState, apply_lowering, factorial, inner_product
from .linop import LinearCircuit, TransformPlan

DEFAULT_TOL = ComplexTolerance(abs_tol=1e-10, phase_tol=1e-8)
OPTIMAL_TOL = 1e-10


def _outputs(circuit: LinearCircuit, plus: PureState, minus: PureState):
    if plus.n_modes != minus.n_modes:
        raise ValueError(f"states have {plus.n_modes} and {minus.n_modes} modes")
    if circuit.dim != plus.n_modes:
        raise ValueError(f"circuit acts on {circuit.dim} modes, states have {plus.n_modes}")
    out_plus, out_minus = TransformPlan([plus, minus]).states(circuit.matrix)
    return out_plus, out_minus


def output_moment(out_plus: PureState, out_minus: PureState, modes: Sequence[int]) -> complex:
    """<out+| A^dag A |out-> with A the product of a_j over the multiset ``modes``."""
    modes = tuple(modes)
    top = max(out_plus.max_photons, out_minus.max_photons)
    if len(modes) > top:
        return 0j
    return inner_product(apply_lowering(out_plus, modes), apply_lowering(out_minus, modes))


def normal_ordered_moment(circuit: LinearCircuit, plus: PureState, minus: PureState,
                          modes: Sequence[int]) -> complex:
    """Moment of the output mode operators, evaluated on the transformed states."""
    modes = tuple(modes)
    if any(not 0 <= j < circuit.dim for j in modes):
        raise ValueError(f"mode indices {modes} out of range for {circuit.dim} modes")
    out_plus, out_minus = _outputs(circuit, plus, minus)
    return output_moment(out_plus, out_minus, modes)


# -- pattern classification and failure probability -------------------------

@dataclass(frozen=True)
class PatternClassification:
    """Output patterns split into conclusive-for-plus (k), conclusive-for-minus (l)
    and ambiguous (m), with the amplitudes of both outputs on their supports."""

    conclusive_plus: tuple
    conclusive_minus: tuple
    ambiguous: tuple
    alpha: dict
    beta: dict


def classify_patterns(out_plus: PureState, out_minus: PureState,
                      tol: float = DEFAULT_TOL.abs_tol) -> PatternClassification:
    if out_plus.n_modes != out_minus.n_modes:
        raise ValueError("output states live on different mode counts")
    alpha = {p: a for p, a in out_plus.terms.items() if abs(a) > tol}
    beta = {p: b for p, b in out_minus.terms.items() if abs(b) > tol}
    k = tuple(sorted(alpha.keys() - beta.keys()))
    l = tuple(sorted(beta.keys() - alpha.keys()))
    m = tuple(sorted(alpha.keys() & beta.keys()))
    return PatternClassification(k, l, m, alpha, beta)


@dataclass(frozen=True)
class PatternContribution:
    pattern: tuple
    p_plus: float
    p_minus: float
    kind: str  # "plus", "minus" or "ambiguous"
    contribution: float


@dataclass(frozen=True)
class UsdReport:
    priors: tuple
    overlap: complex
    prob_fail_circuit: float
    prob_success_circuit: float
    # only defined for equal priors
    prob_fail_optimal: float | None
    optimal: bool | None
    classification: PatternClassification
    contributions: tuple

    def to_dict(self) -> dict:
        return {
            "priors": list(self.priors),
            "overlap": [self.overlap.real, self.overlap.imag],
            "prob_fail_circuit": self.prob_fail_circuit,
            "prob_success_circuit": self.prob_success_circuit,
            "prob_fail_optimal": self.prob_fail_optimal,
            "optimal": self.optimal,
            "patterns": [
                {"pattern": list(c.pattern), "p_plus": c.p_plus, "p_minus": c.p_minus,
                 "kind": c.kind, "contribution": c.contribution}
                for c in self.contributions
            ],
        }


def _check_priors(priors):
    p_plus, p_minus = (float(x) for x in priors)
    if p_plus < 0 or p_minus < 0 or abs(p_plus + p_minus - 1.0) > 1e-12:
        raise ValueError(f"priors must be non-negative and sum to 1, got {priors}")
    return p_plus, p_minus


def usd_report_from_outputs(out_plus: PureState, out_minus: PureState, overlap: complex,
                            priors=(0.5, 0.5), abs_tol: float = DEFAULT_TOL.abs_tol,
                            opt_tol: float = OPTIMAL_TOL) -> UsdReport:
    p_plus, p_minus = _check_priors(priors)
    cls = classify_patterns(out_plus, out_minus, abs_tol)
    rows = []
    for pat in sorted(set(cls.alpha) | set(cls.beta)):
        pp = abs(cls.alpha.get(pat, 0)) ** 2
        pm = abs(cls.beta.get(pat, 0)) ** 2
        if pat in cls.alpha and pat in cls.beta:
            rows.append(PatternContribution(pat, pp, pm, "ambiguous", p_plus * pp + p_minus * pm))
        else:
            rows.append(PatternContribution(pat, pp, pm, "plus" if pat in cls.alpha else "minus", 0.0))
    fail = math.fsum(r.contribution for r in rows)
    equal = abs(p_plus - 0.5) <= 1e-12
    optimum = abs(overlap) if equal else None
    optimal = (abs(fail - optimum) <= opt_tol) if equal else None
    return UsdReport((p_plus, p_minus), complex(overlap), fail, 1.0 - fail, optimum, optimal, cls,
                     tuple(rows))


def usd_report(circuit: LinearCircuit, plus: PureState, minus: PureState, priors=(0.5, 0.5),
               abs_tol: float = DEFAULT_TOL.abs_tol, opt_tol: float = OPTIMAL_TOL) -> UsdReport:
    """Failure probability of the circuit followed by photon counting.

    A pattern is inconclusive when both outputs have amplitude above
    ``abs_tol`` on it. Optimality (failure equal to |<chi+|chi->| within
    ``opt_tol``) is only judged at equal priors.
    """
    _check_priors(priors)
    out_plus, out_minus = _outputs(circuit, plus, minus)
    return usd_report_from_outputs(out_plus, out_minus, inner_product(plus, minus), priors,
                                   abs_tol, opt_tol)


# -- condition hierarchies ---------------------------------------------------

@dataclass(frozen=True)
class ConditionEntry:
    order: int
    modes: tuple
    value: complex
    modulus_bound: float
    phase_ok: bool | None
    modulus_ok: bool
    vanishing: bool

    @property
    def kind(self) -> str:
        return "distinct" if len(set(self.modes)) == len(self.modes) else "repeated"

    @property
    def ok(self) -> bool:
        return self.modulus_ok and self.phase_ok is not False


@dataclass(frozen=True)
class SumRule:
    value: complex
    expected: complex
    ok: bool


@dataclass(frozen=True)
class ConditionReport:
    """Verdict of one hierarchy check; ``verdict`` is the conjunction of all entries."""

    kind: str  # "orthogonal", "usd" or "conditional"
    overlap: complex
    max_photons: int
    entries: tuple
    reference_phase: float | None = None
    sum_rule: SumRule | None = None
    # for fixed photon number inputs the top order alone decides exact discrimination
    sufficient_alone_order: int | None = None
    mode: int | None = None
    notes: tuple = field(default=())

    @property
    def verdict(self) -> bool:
        return all(e.ok for e in self.entries)

    def violations(self) -> list[ConditionEntry]:
        return [e for e in self.entries if not e.ok]

    def order_entries(self, order: int) -> list[ConditionEntry]:
        return [e for e in self.entries if e.order == order]

    def to_csv(self) -> str:
        """CSV with 1-based mode labels, one row per moment."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["order", "modes", "value_re", "value_im", "modulus", "bound",
                         "phase_ok", "modulus_ok", "vanishing"])
        for e in self.entries:
            phase = "na" if e.phase_ok is None else str(e.phase_ok).lower()
            writer.writerow([e.order, " ".join(str(j + 1) for j in e.modes), repr(e.value.real),
                             repr(e.value.imag), repr(abs(e.value)), repr(e.modulus_bound), phase,
                             str(e.modulus_ok).lower(), str(e.vanishing).lower()])
        return buf.getvalue()


def falling_factorial(n: int, r: int) -> int:
    return math.prod(range(n - r + 1, n + 1)) if r <= n else 0


def _phase_close(value: complex, reference: complex, phase_tol: float) -> bool:
    return abs(cmath.phase(value * reference.conjugate())) <= phase_tol


def _max_photons(plus: PureState, minus: PureState) -> int:
    return max(plus.max_photons, minus.max_photons)


def _entry(order, modes, value, overlap, n_max, tol: ComplexTolerance, orthogonal: bool):
    vanishing = abs(value) <= tol.abs_tol
    if orthogonal:
        return ConditionEntry(order, modes, value, 0.0, None, vanishing, vanishing)
    bound = falling_factorial(n_max, order) * abs(overlap)
    phase_ok = None if vanishing else _phase_close(value, overlap, tol.phase_tol)
    return ConditionEntry(order, modes, value, bound, phase_ok, abs(value) <= bound + tol.abs_tol,
                          vanishing)


def _multisets(n_modes: int, max_order: int):
    for r in range(1, max_order + 1):
        yield from combinations_with_replacement(range(n_modes), r)


def _sum_rule(out_plus, out_minus, plus, minus, overlap, tol):
    n_plus, n_minus = plus.fixed_photon_number, minus.fixed_photon_number
    if n_plus is None or n_plus != n_minus:
        return None
    total = sum(output_moment(out_plus, out_minus, (j,)) for j in range(plus.n_modes))
    expected = n_plus * overlap
    return SumRule(total, expected, abs(total - expected) <= tol.abs_tol)


def orthogonal_hierarchy(circuit: LinearCircuit, plus: PureState, minus: PureState,
                         max_order: int | None = None,
                         tol: ComplexTolerance = DEFAULT_TOL) -> ConditionReport:
    """All moments up to ``max_order`` must vanish for exact discrimination.

    For inputs of one fixed photon number N the order is capped at N, and the
    order-N conditions alone are necessary and sufficient.
    """
    overlap = inner_product(plus, minus)
    if abs(overlap) > tol.abs_tol:
        raise ValueError(f"inputs are not orthogonal (|overlap| = {abs(overlap):.3e})")
    out_plus, out_minus = _outputs(circuit, plus, minus)
    n_max = _max_photons(plus, minus)
    fixed = plus.fixed_photon_number if plus.fixed_photon_number == minus.fixed_photon_number else None
    order = n_max if max_order is None else max_order
    if fixed is not None:
        order = min(order, fixed)
    entries = tuple(_entry(len(ms), ms, output_moment(out_plus, out_minus, ms), overlap, n_max, tol,
                           orthogonal=True)
                    for ms in _multisets(circuit.dim, order))
    return ConditionReport("orthogonal", overlap, n_max, entries,
                           sum_rule=_sum_rule(out_plus, out_minus, plus, minus, overlap, tol),
                           sufficient_alone_order=fixed if fixed is not None and order == fixed else None)


def usd_hierarchy(circuit: LinearCircuit, plus: PureState, minus: PureState,
                  max_order: int | None = None,
                  tol: ComplexTolerance = DEFAULT_TOL) -> ConditionReport:
    """Phase and modulus conditions for optimal USD behind a fixed array.

    Every non-vanishing moment must share the phase of <chi+|chi->, and an
    order-r moment may not exceed N (N-1) ... (N-r+1) |<chi+|chi->|, N the
    largest photon number in the inputs. Multisets with repeated modes are
    included (labelled ``repeated``); they carry the conditional-dynamics
    subset. The conditions are necessary, not sufficient.
    """
    overlap = inner_product(plus, minus)
    if abs(overlap) <= tol.abs_tol:
        raise ValueError("inputs are orthogonal; use orthogonal_hierarchy")
    out_plus, out_minus = _outputs(circuit, plus, minus)
    n_max = _max_photons(plus, minus)
    order = n_max if max_order is None else min(max_order, n_max)
    entries = tuple(_entry(len(ms), ms, output_moment(out_plus, out_minus, ms), overlap, n_max, tol,
                           orthogonal=False)
                    for ms in _multisets(circuit.dim, order))
    return ConditionReport("usd", overlap, n_max, entries, reference_phase=cmath.phase(overlap),
                           sum_rule=_sum_rule(out_plus, out_minus, plus, minus, overlap, tol))


def conditional_mode_check(circuit: LinearCircuit, plus: PureState, minus: PureState, mode: int,
                           max_order: int | None = None,
                           tol: ComplexTolerance = DEFAULT_TOL) -> ConditionReport:
    """The subset of conditions that involves only output mode ``mode``:
    moments of (c_j^dag)^n c_j^n for n = 1 .. max_order."""
    if not 0 <= mode < circuit.dim:
        raise ValueError(f"mode {mode} out of range for {circuit.dim} modes")
    overlap = inner_product(plus, minus)
    orthogonal = abs(overlap) <= tol.abs_tol
    out_plus, out_minus = _outputs(circuit, plus, minus)
    n_max = _max_photons(plus, minus)
    order = n_max if max_order is None else max_order
    entries = []
    for n in range(1, order + 1):
        ms = (mode,) * n
        entries.append(_entry(n, ms, output_moment(out_plus, out_minus, ms), overlap, n_max, tol,
                              orthogonal))
    return ConditionReport("conditional", overlap, n_max, tuple(entries),
                           reference_phase=None if orthogonal else cmath.phase(overlap), mode=mode)


# -- structure of optimal outputs -----------------------------------------

@dataclass(frozen=True)
class OptimalFormReport:
    """Whether the ambiguous amplitudes have equal moduli and one common relative phase.

    ``amplitude_deficit`` is sum_m (|alpha_m| - |beta_m|)^2, which equals
    2 (P_fail - sum_m |alpha_m beta_m|) at equal priors; ``phase_deficit`` is
    sum_m |alpha_m beta_m| - |sum_m conj(alpha_m) beta_m|. Both vanish exactly
    for an optimal circuit.
    """

    amplitude_match: bool
    common_phase: bool
    phase: float | None
    amplitude_deficit: float
    phase_deficit: float
    ambiguous: tuple


def optimal_form_check(out_plus: PureState, out_minus: PureState,
                       tol: float = DEFAULT_TOL.abs_tol) -> OptimalFormReport:
    cls = classify_patterns(out_plus, out_minus, tol)
    a = [cls.alpha[m] for m in cls.ambiguous]
    b = [cls.beta[m] for m in cls.ambiguous]
    amp_def = math.fsum((abs(x) - abs(y)) ** 2 for x, y in zip(a, b))
    cross = sum((x.conjugate() * y for x, y in zip(a, b)), 0j)
    phase_def = math.fsum(abs(x) * abs(y) for x, y in zip(a, b)) - abs(cross)
    phase = cmath.phase(cross) if cls.ambiguous else None
    return OptimalFormReport(amp_def <= tol, phase_def <= tol, phase, amp_def, phase_def,
                             cls.ambiguous)


@dataclass(frozen=True)
class HighestOrderEntry:
    modes: tuple
    pattern: tuple
    moment: complex
    product: complex  # conj(Psi(pattern|+)) * Psi(pattern|-)
    factor: float  # prod_j K_j!, relating the two for repeated modes
    consistent: bool


@dataclass(frozen=True)
class HighestOrderTable:
    photons: int
    entries: tuple

    def all_zero(self, tol: float = DEFAULT_TOL.abs_tol) -> bool:
        return all(abs(e.product) <= tol for e in self.entries)

    def nonzero(self, tol: float = DEFAULT_TOL.abs_tol) -> list[HighestOrderEntry]:
        return [e for e in self.entries if abs(e.moment) > tol]


def highest_order_products(circuit: LinearCircuit, plus: PureState, minus: PureState,
                           tol: float = DEFAULT_TOL.abs_tol) -> HighestOrderTable:
    """Top-order moments of fixed-photon-number inputs next to the output
    amplitude products they reduce to.

    Annihilating all N photons leaves only the pattern with occupations equal
    to the multiplicities of the chosen modes, so the moment is
    prod_j K_j! * conj(alpha_K) * beta_K.
    """
    n = plus.fixed_photon_number
    if n is None or n != minus.fixed_photon_number:
        raise ValueError("highest-order products need both inputs at one fixed photon number")
    out_plus, out_minus = _outputs(circuit, plus, minus)
    entries = []
    for ms in combinations_with_replacement(range(circuit.dim), n):
        counts = Counter(ms)
        pattern = tuple(counts.get(j, 0) for j in range(circuit.dim))
        moment = output_moment(out_plus, out_minus, ms)
        product = out_plus.amplitude(pattern).conjugate() * out_minus.amplitude(pattern)
        factor = math.prod(factorial(k) for k in pattern)
        entries.append(HighestOrderEntry(ms, pattern, moment, product, factor,
                                         abs(moment - factor * product) <= tol))
    return HighestOrderTable(n, tuple(entries))


def supports_disjoint(out_plus: PureState, out_minus: PureState,
                      tol: float = DEFAULT_TOL.abs_tol) -> bool:
    return not classify_patterns(out_plus, out_minus, tol).ambiguous


def transformed_pair(circuit: LinearCircuit, plus: PureState, minus: PureState):
    """Both outputs of a circuit, as (out_plus, out_minus)."""
    return _outputs(circuit, plus, minus)


__all__ = [
    "ConditionEntry", "ConditionReport", "HighestOrderEntry", "HighestOrderTable",
    "OptimalFormReport", "PatternClassification", "PatternContribution", "SumRule", "UsdReport",
    "classify_patterns", "conditional_mode_check", "falling_factorial", "highest_order_products",
    "normal_ordered_moment", "optimal_form_check", "orthogonal_hierarchy", "output_moment",
    "supports_disjoint", "transformed_pair", "usd_hierarchy", "usd_report",
    "usd_report_from_outputs",
]
