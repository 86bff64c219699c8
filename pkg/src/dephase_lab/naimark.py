"""One-photon POVMs compiled to linear-optics circuits.

A rank-one POVM {|u_mu><u_mu|} on an n-rail single-photon space is dilated
to an orthonormal set |w_mu> = |u_mu> + |N_mu> on N >= n rails. The N x N
matrix with rows w_mu is unitary; a circuit that maps each |w_mu> to a photon
in rail mu turns photon counting into the POVM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import PureState
from .linop import LinearCircuit, _frozen, transform, validate_unitary

COMPLETENESS_TOL = 1e-10


class PovmError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PovmSet:
    """Rank-one POVM elements E_mu = |u_mu><u_mu| as rows of ``elements``.

    ``extensions`` optionally carries prescribed Naimark vectors N_mu
    (rows, length total_dim - signal_dim).
    """

    signal_dim: int
    elements: np.ndarray
    deviation: float
    extensions: np.ndarray | None = None

    @property
    def total_dim(self) -> int:
        return self.elements.shape[0]

    def operator(self, mu: int) -> np.ndarray:
        u = self.elements[mu]
        return np.outer(u, u.conj())

    def probabilities(self, psi) -> np.ndarray:
        """Born-rule outcome probabilities <psi|E_mu|psi> for a signal vector."""
        psi = np.asarray(psi, dtype=complex)
        return np.abs(self.elements.conj() @ psi) ** 2


def validate_povm(elements, signal_dim: int, tol: float = COMPLETENESS_TOL) -> PovmSet:
    vecs = np.array([np.asarray(v, dtype=complex) for v in elements])
    if vecs.ndim != 2 or vecs.shape[1] != signal_dim:
        raise PovmError(f"every element must have length {signal_dim}")
    total = vecs.T @ vecs.conj()  # sum_mu |u_mu><u_mu|
    deviation = float(np.max(np.abs(total - np.eye(signal_dim))))
    if deviation > tol:
        raise PovmError(f"elements do not sum to the identity (max deviation {deviation:.3e})")
    return PovmSet(signal_dim, _frozen(vecs), deviation)


@dataclass(frozen=True)
class UsdPovm:
    povm: PovmSet
    alpha: float
    beta: float
    prob_success: float
    prob_fail: float


def usd_povm(alpha: float, beta: float) -> UsdPovm:
    """Optimal USD POVM for alpha|0> +/- beta|1> (alpha > beta > 0, real).

    Outcomes 1 and 2 identify the plus and minus state, outcome 3 is
    inconclusive; the Naimark vectors live on a third rail.
    """
    alpha, beta = float(alpha), float(beta)
    if not (alpha > beta > 0):
        raise PovmError(f"need alpha > beta > 0, got alpha={alpha}, beta={beta}")
    if abs(alpha ** 2 + beta ** 2 - 1) > 1e-12:
        raise PovmError("alpha^2 + beta^2 must equal 1")
    x = beta / alpha
    s = math.sqrt(1 - x * x)
    r = 1 / math.sqrt(2)
    u = [[r * x, r], [r * x, -r], [s, 0.0]]
    ext = np.array([[r * s], [r * s], [-x]], dtype=complex)
    povm = validate_povm(u, 2)
    povm = PovmSet(2, povm.elements, povm.deviation, _frozen(ext))

    plus = np.array([alpha, beta])
    minus = np.array([alpha, -beta])
    p_plus, p_minus = povm.probabilities(plus), povm.probabilities(minus)
    # unambiguity: E_1 never fires on minus, E_2 never on plus
    if p_minus[0] > 1e-12 or p_plus[1] > 1e-12:
        raise AssertionError("constructed POVM is not unambiguous")
    succ = (p_plus[0] + p_minus[1]) / 2
    fail = (p_plus[2] + p_minus[2]) / 2
    if abs(succ - 2 * beta ** 2) > 1e-12:
        raise AssertionError("constructed POVM misses the optimal success probability")
    return UsdPovm(povm, alpha, beta, float(succ), float(fail))


@dataclass(frozen=True, eq=False)
class NaimarkDilation:
    """Rows of ``unitary`` are the orthonormal vectors w_mu = u_mu (+) N_mu."""

    povm: PovmSet
    unitary: LinearCircuit

    @property
    def extensions(self) -> np.ndarray:
        return self.unitary.matrix[:, self.povm.signal_dim:]

    @property
    def circuit(self) -> LinearCircuit:
        """Circuit sending |w_mu> to a single photon in rail mu.

        In this package's convention a photon in input rail i leaves in
        superposition sum_k M[k, i] |k>, so the circuit matrix is conj(U).
        """
        return LinearCircuit(_frozen(self.unitary.matrix.conj()))


def _complete_columns(cols: np.ndarray, total: int, tol: float = 1e-8) -> np.ndarray:
    """Extend orthonormal columns to an orthonormal basis by Gram-Schmidt on e_0, e_1, ..."""
    basis = [cols[:, i] for i in range(cols.shape[1])]
    for i in range(total):
        if len(basis) == total:
            break
        v = np.zeros(total, dtype=complex)
        v[i] = 1.0
        # two passes keep the result orthogonal to working precision
        for _ in range(2):
            for b in basis:
                v = v - b * np.vdot(b, v)
        norm = np.linalg.norm(v)
        if norm > tol:
            basis.append(v / norm)
    if len(basis) != total:
        raise PovmError("could not complete the POVM columns to a unitary")
    return np.column_stack(basis)


def naimark_unitary(povm: PovmSet) -> NaimarkDilation:
    """Dilate a POVM with exactly N = total_dim elements to an N x N unitary.

    The first signal_dim columns are the u components; the remaining columns
    come from orthonormalizing the canonical basis against them in index
    order, which fixes one of the many possible extensions.
    """
    n, big = povm.signal_dim, povm.total_dim
    if big < n:
        raise PovmError(f"{big} elements cannot dilate a {n}-dimensional signal space")
    cols = np.array(povm.elements, dtype=complex)
    gram = cols.conj().T @ cols
    if np.max(np.abs(gram - np.eye(n))) > COMPLETENESS_TOL:
        raise PovmError("element columns are not orthonormal")
    full = _complete_columns(cols, big)
    return NaimarkDilation(povm, validate_unitary(full))


def rail_state(amplitudes, n_rails: int) -> PureState:
    """Single photon spread over rails: sum_i amplitudes[i] |0..1_i..0>."""
    terms = {}
    for i, a in enumerate(amplitudes):
        pattern = [0] * n_rails
        pattern[i] = 1
        terms[tuple(pattern)] = complex(a)
    return PureState(n_rails, terms)


def simulate_povm(dilation: NaimarkDilation, state: PureState) -> np.ndarray:
    """Click probability in each rail after the dilation circuit.

    ``state`` must hold one photon on the dilated rails, with the photon
    confined to the first signal_dim rails.
    """
    big = dilation.povm.total_dim
    if state.n_modes != big:
        raise ValueError(f"state has {state.n_modes} modes, dilation needs {big}")
    if state.photon_numbers() - {1}:
        raise ValueError("simulate_povm accepts single-photon inputs only")
    n = dilation.povm.signal_dim
    if any(p.index(1) >= n for p in state.terms):
        raise ValueError("photon found outside the signal rails")
    out = transform(dilation.circuit, state)
    probs = np.zeros(big)
    for pattern, amp in out.terms.items():
        probs[pattern.index(1)] += abs(amp) ** 2
    return probs
