"""Passive linear optics: validated unitaries and their action on Fock states.

Convention: output mode operators are c_j = U^dag a_j U = sum_i U[j, i] a_i.
Equivalently the state map substitutes a^dag_i -> sum_j U[j, i] a^dag_j, so
column i of the matrix says where a photon entering mode i goes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import PureState, embed_state, factorial

UNITARY_TOL = 1e-10


class UnitarityError(ValueError):
    """Raised for matrices that are not unitary within tolerance."""

    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        super().__init__(f"matrix is not unitary: max |U^dag U - 1| = {deviation:.3e} > {tol:.1e}")


@dataclass(frozen=True, eq=False)
class LinearCircuit:
    """An N x N unitary; row j is output mode j, column i is input mode i."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def adjoint(self) -> "LinearCircuit":
        return LinearCircuit(_frozen(self.matrix.conj().T))

    def __eq__(self, other):
        if not isinstance(other, LinearCircuit):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())


def _frozen(matrix) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    m.setflags(write=False)
    return m


def unitarity_deviation(matrix) -> float:
    m = np.asarray(matrix, dtype=complex)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def validate_unitary(matrix, tol: float = UNITARY_TOL) -> LinearCircuit:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    dev = unitarity_deviation(m)
    if dev > tol:
        raise UnitarityError(dev, tol)
    return LinearCircuit(_frozen(m))


def identity(dim: int) -> LinearCircuit:
    return LinearCircuit(_frozen(np.eye(dim)))


def beam_splitter_50_50() -> LinearCircuit:
    """The real symmetric beam splitter (1, 1; 1, -1) / sqrt(2)."""
    return LinearCircuit(_frozen(np.array([[1, 1], [1, -1]]) / math.sqrt(2)))


def haar_random(dim: int, seed) -> LinearCircuit:
    """Haar-distributed unitary from a seeded generator (QR of a Ginibre matrix)."""
    if dim < 1:
        raise ValueError("dim must be positive")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return LinearCircuit(_frozen(q))


# -- action on states ------------------------------------------------------

def _compositions(n: int, parts: int):
    if parts == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


class TransformPlan:
    """Precomputed expansion of one or more states under an arbitrary circuit.

    Every input term is expanded by distributing the photons of each input
    mode over the output modes. The structure depends only on the states, so
    the plan can be evaluated for many matrices (the optimizer does this).
    All states share one output basis, ``self.basis``.
    """

    def __init__(self, states: Sequence[PureState]):
        if not states:
            raise ValueError("need at least one state")
        m = states[0].n_modes
        if any(s.n_modes != m for s in states):
            raise ValueError("all states in a plan must have the same mode count")
        self.n_modes = m
        self.n_states = len(states)
        self.max_n = max((s.max_photons for s in states), default=0)

        index: dict[tuple, int] = {}
        exps, coefs, outs, owners = [], [], [], []
        comp_cache: dict[int, list] = {}
        for which, state in enumerate(states):
            for pattern, amp in state.terms.items():
                norm = amp / math.sqrt(math.prod(factorial(n) for n in pattern))
                per_mode = []
                for n in pattern:
                    if n not in comp_cache:
                        comp_cache[n] = [(k, factorial(n) / math.prod(factorial(x) for x in k))
                                         for k in _compositions(n, m)]
                    per_mode.append(comp_cache[n])
                for choice in _product(per_mode):
                    e = np.zeros((m, m), dtype=np.int64)
                    weight = norm
                    for i, (k, multinom) in enumerate(choice):
                        e[:, i] = k
                        weight *= multinom
                    out = tuple(int(x) for x in e.sum(axis=1))
                    weight *= math.sqrt(math.prod(factorial(x) for x in out))
                    if out not in index:
                        index[out] = len(index)
                    exps.append(e.reshape(-1))
                    coefs.append(weight)
                    outs.append(index[out])
                    owners.append(which)

        order = sorted(index)
        remap = np.empty(len(index), dtype=np.int64)
        for new, pat in enumerate(order):
            remap[index[pat]] = new
        self.basis = order
        self._exps = np.array(exps, dtype=np.int64).reshape(-1, m * m)
        self._coefs = np.array(coefs, dtype=complex)
        self._slots = np.array(owners, dtype=np.int64) * len(order) + remap[np.array(outs, dtype=np.int64)]
        self._rows = np.repeat(np.arange(m), m)
        self._cols = np.tile(np.arange(m), m)

    def amplitudes(self, matrix) -> np.ndarray:
        """Output amplitudes, shape (n_states, len(basis))."""
        u = np.asarray(matrix, dtype=complex)
        powers = np.empty((self.n_modes, self.n_modes, self.max_n + 1), dtype=complex)
        powers[..., 0] = 1.0
        for p in range(1, self.max_n + 1):
            powers[..., p] = powers[..., p - 1] * u
        factors = powers[self._rows, self._cols, self._exps]
        vals = self._coefs * np.prod(factors, axis=1)
        size = self.n_states * len(self.basis)
        re = np.bincount(self._slots, weights=vals.real, minlength=size)
        im = np.bincount(self._slots, weights=vals.imag, minlength=size)
        return (re + 1j * im).reshape(self.n_states, len(self.basis))

    def states(self, matrix) -> list[PureState]:
        amps = self.amplitudes(matrix)
        return [PureState(self.n_modes, dict(zip(self.basis, row))) for row in amps]


def _product(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for tail in _product(lists[1:]):
            yield (head,) + tail


def transform(circuit: LinearCircuit, state: PureState) -> PureState:
    """Output state U|state> of the circuit, expanded exactly."""
    if circuit.dim != state.n_modes:
        raise ValueError(f"circuit acts on {circuit.dim} modes, state has {state.n_modes}")
    if state.is_zero:
        return state
    return TransformPlan([state]).states(circuit.matrix)[0]


def embed_with_vacuum(obj, extra_modes: int):
    """Append vacuum modes to a state, or an identity block to a circuit."""
    if extra_modes < 0:
        raise ValueError("extra_modes must be non-negative")
    if isinstance(obj, PureState):
        return embed_state(obj, extra_modes)
    if isinstance(obj, LinearCircuit):
        n = obj.dim
        m = np.eye(n + extra_modes, dtype=complex)
        m[:n, :n] = obj.matrix
        return LinearCircuit(_frozen(m))
    raise TypeError(f"cannot embed {type(obj).__name__}")


# -- Givens mesh -----------------------------------------------------------

@dataclass(frozen=True)
class GivensParameterization:
    """Triangular mesh of two-mode rotations followed by output phases.

    ``angles[k]`` and ``phases[k]`` belong to the k-th rotation in
    :func:`mesh_order`; the last ``dim`` phases form the output diagonal.
    """

    dim: int
    angles: tuple
    phases: tuple

    def __post_init__(self):
        n_rot = self.dim * (self.dim - 1) // 2
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if len(self.angles) != n_rot or len(self.phases) != n_rot + self.dim:
            raise ValueError(f"dim {self.dim} needs {n_rot} angles and {n_rot + self.dim} phases, "
                             f"got {len(self.angles)} and {len(self.phases)}")

    @property
    def n_params(self) -> int:
        return len(self.angles) + len(self.phases)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.angles, self.phases]).astype(float)

    @classmethod
    def from_vector(cls, dim: int, vec) -> "GivensParameterization":
        n_rot = dim * (dim - 1) // 2
        vec = [float(x) for x in vec]
        return cls(dim, tuple(vec[:n_rot]), tuple(vec[n_rot:]))


def mesh_order(dim: int) -> list[tuple[int, int]]:
    """(row, column) of the entry each rotation nulls; it mixes modes column, column+1."""
    return [(r, c) for r in range(dim - 1, 0, -1) for c in range(r)]


def _rotation(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    e = complex(math.cos(phi), math.sin(phi))
    return np.array([[e * c, -s], [e * s, c]])


def mesh_matrix(dim: int, angles, phases) -> np.ndarray:
    """Unitary of a mesh from raw angle/phase arrays (no range checks)."""
    u = np.eye(dim, dtype=complex)
    for (_, c), theta, phi in zip(mesh_order(dim), angles, phases):
        t = _rotation(theta, phi)
        u[c:c + 2, :] = t @ u[c:c + 2, :]
    diag = np.exp(1j * np.asarray(phases[len(angles):], dtype=float))
    return diag[:, None] * u


def compose_from_givens(params: GivensParameterization) -> LinearCircuit:
    return LinearCircuit(_frozen(mesh_matrix(params.dim, params.angles, params.phases)))


def decompose_to_givens(circuit: LinearCircuit) -> GivensParameterization:
    """Null the lower triangle row by row from the bottom with column rotations.

    Angles land in [0, pi/2] and phases in [0, 2 pi).
    """
    v = np.array(circuit.matrix, dtype=complex)
    dim = v.shape[0]
    angles, phases = [], []
    for r, c in mesh_order(dim):
        a, b = v[r, c], v[r, c + 1]
        theta = math.atan2(abs(a), abs(b))
        phi = (np.angle(a) - np.angle(b)) if abs(a) > 0 and abs(b) > 0 else 0.0
        t = _rotation(theta, phi)
        v[:, c:c + 2] = v[:, c:c + 2] @ t.conj().T
        angles.append(theta)
        phases.append(float(phi) % (2 * math.pi))
    phases.extend(float(x) % (2 * math.pi) for x in np.angle(np.diag(v)))
    return GivensParameterization(dim, tuple(angles), tuple(phases))
