"""Total and partial dephasing in the Fock basis.

Photon counting after a circuit is equivalent to dephasing the output state:
averaging over independent phase rotations of every detected mode removes all
coherences between different occupation numbers. The phase average is done
analytically here, by keeping only the diagonal.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .fock import FockPattern, PureState, pattern_key

BLOCK_DROP_TOL = 1e-14


@dataclass(frozen=True)
class DiagonalMixture:
    """Fock-diagonal density operator: pattern -> probability."""

    n_modes: int
    weights: Mapping[tuple, float]

    def __post_init__(self):
        object.__setattr__(self, "weights", MappingProxyType(dict(self.weights)))
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("negative probability in mixture")
        if self.total > 1 + 1e-12:
            raise ValueError(f"mixture weights sum to {self.total} > 1")

    @property
    def total(self) -> float:
        return math.fsum(self.weights.values())

    def probability(self, pattern) -> float:
        return self.weights.get(tuple(pattern), 0.0)


@dataclass(frozen=True)
class Block:
    probability: float
    # None when every mode was dephased (nothing left to condition on)
    state: PureState | None


@dataclass(frozen=True)
class BlockMixture:
    """State dephased on a subset of modes.

    ``blocks`` maps the occupation of the dephased modes (in increasing mode
    order) to the block probability and the normalized conditional state of
    the remaining modes.
    """

    n_modes: int
    dephased_modes: tuple
    blocks: Mapping[tuple, Block]
    dropped: tuple = field(default=())

    @property
    def remaining_modes(self) -> tuple:
        return tuple(j for j in range(self.n_modes) if j not in self.dephased_modes)

    @property
    def total(self) -> float:
        return math.fsum(b.probability for b in self.blocks.values())


def dephase_total(state: PureState) -> DiagonalMixture:
    return DiagonalMixture(state.n_modes, {p: abs(a) ** 2 for p, a in state.terms.items()})


def dephase_partial(state: PureState, modes: Iterable[int]) -> BlockMixture:
    """Dephase only ``modes``; the others keep their coherences.

    Blocks whose probability falls below 1e-14 are dropped and listed in
    ``dropped``.
    """
    chosen = tuple(sorted(set(int(j) for j in modes)))
    if not chosen:
        raise ValueError("need at least one mode to dephase")
    if any(not 0 <= j < state.n_modes for j in chosen):
        raise ValueError(f"dephased modes {chosen} out of range for {state.n_modes} modes")
    rest = tuple(j for j in range(state.n_modes) if j not in chosen)

    grouped: dict[tuple, dict[tuple, complex]] = {}
    for pattern, amp in state.terms.items():
        key = tuple(pattern[j] for j in chosen)
        sub = tuple(pattern[j] for j in rest)
        grouped.setdefault(key, {})[sub] = amp

    blocks, dropped = {}, []
    for key in sorted(grouped):
        sub_terms = grouped[key]
        prob = math.fsum(abs(a) ** 2 for a in sub_terms.values())
        if prob < BLOCK_DROP_TOL:
            dropped.append(key)
            continue
        if rest:
            cond = PureState(len(rest), sub_terms).normalize()
        else:
            cond = None
        blocks[key] = Block(prob, cond)
    return BlockMixture(state.n_modes, chosen, MappingProxyType(blocks), tuple(dropped))


def pattern_distribution(mix: DiagonalMixture) -> list[tuple[FockPattern, float]]:
    """(pattern, probability) pairs in lexicographic pattern order."""
    if not mix.weights:
        raise ValueError("mixture has no support")
    return [(FockPattern(p), mix.weights[p]) for p in sorted(mix.weights)]


def distribution_csv(mix: DiagonalMixture) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pattern", "probability"])
    for pattern, prob in pattern_distribution(mix):
        writer.writerow([pattern_key(pattern), repr(prob)])
    return buf.getvalue()
