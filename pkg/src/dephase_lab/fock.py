"""Sparse multimode Fock states.

A pure state is stored as a map from occupation patterns to complex
amplitudes. Everything here is immutable; operations return new states.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

PRUNE_TOL = 1e-14
NORM_TOL = 1e-10


@dataclass(frozen=True)
class ComplexTolerance:
    """Thresholds used when comparing amplitudes and phases.

    ``abs_tol`` is the magnitude below which a complex number counts as zero,
    ``phase_tol`` the largest phase difference (radians) still counted as equal.
    """

    abs_tol: float = 1e-10
    phase_tol: float = 1e-8

    def __post_init__(self):
        for name in ("abs_tol", "phase_tol"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")


class FockPattern(tuple):
    """Photon number per mode, e.g. ``FockPattern((2, 0))`` for |20>.

    Hashes and compares like the plain tuple, so either can key a state.
    """

    __slots__ = ()

    def __new__(cls, occupations: Iterable[int]):
        occ = tuple(int(n) for n in occupations)
        if not occ:
            raise ValueError("a pattern needs at least one mode")
        if any(n < 0 for n in occ):
            raise ValueError(f"negative occupation in {occ}")
        return super().__new__(cls, occ)

    @property
    def total(self) -> int:
        return sum(self)

    def __repr__(self):
        return "|" + ",".join(map(str, self)) + ">"


def factorial(n: int) -> float:
    # exact integers up to 20!, float beyond
    if n <= 20:
        return float(math.factorial(n))
    return math.gamma(n + 1.0)


def pattern_key(pattern: Sequence[int]) -> str:
    """Space-separated serialization used in CSV reports."""
    return " ".join(str(n) for n in pattern)


class PureState:
    """Sparse superposition of Fock patterns on ``n_modes`` modes.

    Build states with :func:`build_pure_state`; the constructor trusts its
    input and only prunes tiny amplitudes. The zero vector (e.g. from
    annihilating the vacuum) is representable and has ``is_zero`` set.
    """

    __slots__ = ("_n_modes", "_terms", "_norm_sq", "_meta")

    def __init__(self, n_modes: int, terms: Mapping[tuple, complex],
                 prune_tol: float = PRUNE_TOL, meta: Mapping | None = None):
        if n_modes < 1:
            raise ValueError("n_modes must be positive")
        kept = {}
        for pattern, amp in terms.items():
            amp = complex(amp)
            if abs(amp) > prune_tol:
                kept[tuple(pattern)] = amp
        self._n_modes = int(n_modes)
        self._terms = MappingProxyType(kept)
        self._norm_sq = math.fsum(abs(a) ** 2 for a in kept.values())
        self._meta = MappingProxyType(dict(meta or {}))

    @property
    def n_modes(self) -> int:
        return self._n_modes

    @property
    def terms(self) -> Mapping[tuple, complex]:
        return self._terms

    @property
    def meta(self) -> Mapping:
        """Free-form metadata, e.g. the truncation deficit of coherent states."""
        return self._meta

    @property
    def norm_sq(self) -> float:
        return self._norm_sq

    @property
    def normalized(self) -> bool:
        return abs(self._norm_sq - 1.0) <= NORM_TOL

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def amplitude(self, pattern: Sequence[int]) -> complex:
        return self._terms.get(tuple(pattern), 0j)

    def patterns(self) -> list[FockPattern]:
        """Support in lexicographic order."""
        return [FockPattern(p) for p in sorted(self._terms)]

    def items(self) -> list[tuple[FockPattern, complex]]:
        return [(FockPattern(p), self._terms[p]) for p in sorted(self._terms)]

    def photon_numbers(self) -> set[int]:
        return {sum(p) for p in self._terms}

    @property
    def max_photons(self) -> int:
        return max(self.photon_numbers(), default=0)

    @property
    def fixed_photon_number(self) -> int | None:
        """Total photon number if every term carries the same count, else None."""
        numbers = self.photon_numbers()
        return numbers.pop() if len(numbers) == 1 else None

    def normalize(self) -> "PureState":
        if self.is_zero:
            raise ValueError("cannot normalize the zero state")
        scale = 1.0 / math.sqrt(self._norm_sq)
        return PureState(self._n_modes, {p: a * scale for p, a in self._terms.items()},
                         meta=self._meta)

    def scaled(self, factor: complex) -> "PureState":
        return PureState(self._n_modes, {p: a * factor for p, a in self._terms.items()},
                         meta=self._meta)

    def to_vector(self, basis: Sequence[tuple]) -> np.ndarray:
        return np.array([self._terms.get(tuple(p), 0j) for p in basis], dtype=complex)

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return self._n_modes == other._n_modes and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((self._n_modes, frozenset(self._terms.items())))

    def __repr__(self):
        shown = " + ".join(f"({a:.4g}){FockPattern(p)!r}" for p, a in self.items()[:6])
        more = " + ..." if len(self._terms) > 6 else ""
        return f"PureState(n_modes={self._n_modes}, {shown or '0'}{more})"


def build_pure_state(n_modes: int, terms: Iterable[tuple[Sequence[int], complex]],
                     prune_tol: float = PRUNE_TOL) -> PureState:
    """Validated constructor: merges duplicate patterns, prunes tiny amplitudes.

    >>> s = build_pure_state(2, [([1, 0], 0.6), ([1, 0], 0.2)])
    >>> s.amplitude((1, 0))
    (0.8+0j)
    """
    if n_modes < 1:
        raise ValueError("n_modes must be positive")
    merged: dict[tuple, complex] = {}
    for pattern, amp in terms:
        pat = FockPattern(pattern)
        if len(pat) != n_modes:
            raise ValueError(f"pattern {tuple(pat)} has {len(pat)} modes, expected {n_modes}")
        merged[tuple(pat)] = merged.get(tuple(pat), 0j) + complex(amp)
    state = PureState(n_modes, merged, prune_tol=prune_tol)
    if state.is_zero:
        raise ValueError("state has no amplitude above the prune threshold")
    return state


def basis_state(pattern: Sequence[int]) -> PureState:
    return build_pure_state(len(pattern), [(pattern, 1.0)])


def vacuum(n_modes: int) -> PureState:
    return basis_state((0,) * n_modes)


def _check_modes(a: PureState, b: PureState):
    if a.n_modes != b.n_modes:
        raise ValueError(f"mode count mismatch: {a.n_modes} vs {b.n_modes}")


def inner_product(bra: PureState, ket: PureState) -> complex:
    """<bra|ket>, conjugate-linear in the first argument."""
    _check_modes(bra, ket)
    if len(bra.terms) <= len(ket.terms):
        acc = [a.conjugate() * ket.terms[p] for p, a in bra.terms.items() if p in ket.terms]
    else:
        acc = [bra.terms[p].conjugate() * a for p, a in ket.terms.items() if p in bra.terms]
    return complex(math.fsum(z.real for z in acc), math.fsum(z.imag for z in acc))


def tensor(a: PureState, b: PureState) -> PureState:
    """|a> (x) |b>, with the modes of ``b`` appended after those of ``a``."""
    terms = {pa + pb: xa * xb for pa, xa in a.terms.items() for pb, xb in b.terms.items()}
    return PureState(a.n_modes + b.n_modes, terms)


def _poisson_cutoff(mean: float, tail_tol: float) -> tuple[int, float]:
    """Smallest n_max with P(n > n_max) < tail_tol for a Poisson(mean) count."""
    kept = 0.0
    n = 0
    log_p = -mean
    while True:
        kept += math.exp(log_p)
        tail = 1.0 - kept
        if tail < tail_tol:
            return n, max(tail, 0.0)
        n += 1
        log_p += math.log(mean) - math.log(n) if mean > 0 else -math.inf
        if n > 10_000:
            raise RuntimeError("coherent truncation did not converge")


def coherent_product_state(amplitudes: Sequence[complex], tail_tol: float = 1e-12,
                           truncation: str = "total") -> PureState:
    """Truncated product of coherent states |a_1> (x) |a_2> (x) ...

    ``truncation="total"`` keeps every term whose total photon number is at
    most the smallest cutoff leaving a Poisson tail (over all modes) below
    ``tail_tol``. Keeping whole photon-number sectors makes the truncation
    commute with any linear-optics circuit. ``truncation="mode"`` cuts each
    mode separately at its own cutoff instead.

    The state is not renormalized; the neglected probability is stored in
    ``state.meta["truncation_deficit"]``.
    """
    if not 0.0 < tail_tol < 1.0:
        raise ValueError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    alphas = [complex(a) for a in amplitudes]
    if not alphas:
        raise ValueError("need at least one mode")
    if truncation not in ("total", "mode"):
        raise ValueError(f"unknown truncation {truncation!r}")

    def single(alpha, n_max):
        pref = math.exp(-abs(alpha) ** 2 / 2)
        return [pref * alpha ** n / math.sqrt(factorial(n)) for n in range(n_max + 1)]

    if truncation == "mode":
        state = None
        for alpha in alphas:
            n_max, _ = _poisson_cutoff(abs(alpha) ** 2, tail_tol)
            mode = PureState(1, {(n,): c for n, c in enumerate(single(alpha, n_max))})
            state = mode if state is None else tensor(state, mode)
        deficit = 1.0 - state.norm_sq
        return PureState(state.n_modes, state.terms, meta={"truncation_deficit": deficit,
                                                           "truncation": "mode"})

    mean = sum(abs(a) ** 2 for a in alphas)
    n_max, _ = _poisson_cutoff(mean, tail_tol)
    per_mode = [single(a, n_max) for a in alphas]
    terms = {}
    for pattern in _patterns_up_to(len(alphas), n_max):
        amp = 1.0 + 0j
        for mode, n in enumerate(pattern):
            amp *= per_mode[mode][n]
        terms[pattern] = amp
    state = PureState(len(alphas), terms)
    return PureState(state.n_modes, state.terms,
                     meta={"truncation_deficit": 1.0 - state.norm_sq, "truncation": "total",
                           "cutoff": n_max})


def _patterns_up_to(n_modes: int, n_max: int):
    for total in range(n_max + 1):
        yield from patterns_with_total(n_modes, total)


def patterns_with_total(n_modes: int, total: int):
    """All occupation tuples on ``n_modes`` modes carrying ``total`` photons, lexicographic."""
    if n_modes == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in patterns_with_total(n_modes - 1, total - first):
            yield (first,) + rest


def apply_lowering(state: PureState, modes: Iterable[int]) -> PureState:
    """Apply the product of annihilators a_j for every j in ``modes`` (a multiset).

    The result may be unnormalized or the zero state.
    """
    counts = Counter(int(j) for j in modes)
    for j in counts:
        if not 0 <= j < state.n_modes:
            raise ValueError(f"mode index {j} out of range for {state.n_modes} modes")
    terms = {}
    for pattern, amp in state.terms.items():
        new = list(pattern)
        factor = 1.0
        for j, k in counts.items():
            n = new[j]
            if n < k:
                factor = 0.0
                break
            # a^k |n> = sqrt(n!/(n-k)!) |n-k>
            factor *= math.sqrt(factorial(n) / factorial(n - k))
            new[j] = n - k
        if factor:
            key = tuple(new)
            terms[key] = terms.get(key, 0j) + amp * factor
    return PureState(state.n_modes, terms)


def embed_state(state: PureState, extra_modes: int) -> PureState:
    """Append ``extra_modes`` vacuum modes."""
    if extra_modes < 0:
        raise ValueError("extra_modes must be non-negative")
    pad = (0,) * extra_modes
    return PureState(state.n_modes + extra_modes,
                     {p + pad: a for p, a in state.terms.items()}, meta=state.meta)


def number_expectation(state: PureState, mode: int) -> float:
    return math.fsum(abs(a) ** 2 * p[mode] for p, a in state.terms.items())
