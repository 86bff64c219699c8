"""Fidelities of pure, diagonal and block-dephased states, and the bound chain

    F(inputs) <= F(dephased outputs) <= P_fail ** 2

that every static linear-optics USD scheme must respect.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

from .dephase import BlockMixture, DiagonalMixture, dephase_partial, dephase_total
from .fock import PureState, inner_product
from .linop import LinearCircuit, transform

BOUND_TOL = 1e-10


def fidelity_pure(a: PureState, b: PureState) -> float:
    if not (a.normalized and b.normalized):
        raise ValueError(f"fidelity_pure needs normalized states (norms^2 {a.norm_sq}, {b.norm_sq})")
    return min(1.0, abs(inner_product(a, b)) ** 2)


def bhattacharyya(m1: DiagonalMixture, m2: DiagonalMixture) -> float:
    """sum over shared patterns of sqrt(p1 * p2)."""
    if m1.n_modes != m2.n_modes:
        raise ValueError("mixtures live on different mode counts")
    shared = m1.weights.keys() & m2.weights.keys()
    return math.fsum(math.sqrt(m1.weights[p] * m2.weights[p]) for p in shared)


def fidelity_diagonal(m1: DiagonalMixture, m2: DiagonalMixture) -> float:
    # commuting states: F = (sum sqrt(p q))^2
    return bhattacharyya(m1, m2) ** 2


def fidelity_block(b1: BlockMixture, b2: BlockMixture) -> float:
    if b1.dephased_modes != b2.dephased_modes or b1.n_modes != b2.n_modes:
        raise ValueError("block mixtures were dephased on different modes")
    total = []
    for key in b1.blocks.keys() & b2.blocks.keys():
        x, y = b1.blocks[key], b2.blocks[key]
        overlap = 1.0 if x.state is None else abs(inner_product(x.state, y.state))
        total.append(math.sqrt(x.probability * y.probability) * overlap)
    return math.fsum(total) ** 2


@dataclass(frozen=True)
class FidelityBoundsReport:
    f_input: float
    f_dephased: float
    prob_fail: float
    lower_ok: bool
    upper_ok: bool
    slack_lower: float
    slack_upper: float

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        return asdict(self)


def dephased_fidelity(out_plus: PureState, out_minus: PureState,
                      dephased_modes: Iterable[int] | None = None) -> float:
    """Fidelity of two output states after dephasing all modes (None) or a subset."""
    if dephased_modes is None:
        return fidelity_diagonal(dephase_total(out_plus), dephase_total(out_minus))
    modes = tuple(dephased_modes)
    return fidelity_block(dephase_partial(out_plus, modes), dephase_partial(out_minus, modes))


def check_fidelity_bounds(plus: PureState, minus: PureState, circuit: LinearCircuit,
                          dephased_modes: Iterable[int] | None, prob_fail: float,
                          tol: float = BOUND_TOL) -> FidelityBoundsReport:
    """Check F_in <= F_dephased <= prob_fail^2; violations are reported, not raised."""
    if not 0.0 <= prob_fail <= 1.0 + tol:
        raise ValueError(f"prob_fail must lie in [0, 1], got {prob_fail}")
    f_in = abs(inner_product(plus, minus)) ** 2
    f_deph = dephased_fidelity(transform(circuit, plus), transform(circuit, minus), dephased_modes)
    slack_lower = f_deph - f_in
    slack_upper = prob_fail ** 2 - f_deph
    return FidelityBoundsReport(f_in, f_deph, prob_fail, slack_lower >= -tol, slack_upper >= -tol,
                                slack_lower, slack_upper)
