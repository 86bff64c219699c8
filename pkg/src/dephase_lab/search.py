"""Derivative-free search for USD circuits, and the analytic two-photon test.

The failure probability of a circuit is piecewise constant in the circuit
parameters (a pattern only stops being ambiguous when an amplitude vanishes
exactly), so the simplex search descends the Bhattacharyya coefficient
sum_p sqrt(P+_p P-_p) instead. It is a continuous lower bound on the failure
probability and equals |<chi+|chi->| at an optimal circuit. Restarts are then
ranked by the failure probability at the classification tolerance, with the
surrogate breaking ties.

A search that misses the optimum is reported as "not found within budget",
never as a proof of impossibility.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.optimize import minimize

from .discrimination import (ConditionReport, UsdReport, orthogonal_hierarchy, usd_hierarchy,
                             usd_report_from_outputs)
from .fock import ComplexTolerance, PureState, inner_product, tensor
from .linop import (GivensParameterization, LinearCircuit, TransformPlan, _frozen,
                    beam_splitter_50_50, decompose_to_givens, embed_with_vacuum, mesh_matrix)

log = logging.getLogger(__name__)

THREADS_ENV = "DEPHASE_LAB_THREADS"


@dataclass(frozen=True)
class SearchConfig:
    n_modes: int
    restarts: int = 64
    seed: int = 0
    max_iter: int = 2000
    tol: float = 1e-9
    classification_tol: float = 1e-8

    def __post_init__(self):
        if self.n_modes < 1 or self.restarts < 1 or self.max_iter < 1:
            raise ValueError("n_modes, restarts and max_iter must be positive")
        if not (self.tol > 0 and self.classification_tol > 0):
            raise ValueError("tolerances must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"ancillas"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "n_modes" not in data:
            raise ValueError("config needs n_modes")
        return cls(**{k: v for k, v in data.items() if k in known})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RestartOutcome:
    index: int
    objective: float
    surrogate: float
    n_evals: int
    converged: bool


@dataclass(frozen=True)
class SearchResult:
    best_circuit: LinearCircuit
    best_params: GivensParameterization
    best_objective: float
    surrogate: float
    overlap: complex
    optimal: bool
    usd_report: UsdReport
    hierarchy: ConditionReport
    trace: tuple
    config: SearchConfig

    @property
    def status(self) -> str:
        return "optimal" if self.optimal else "not found within budget"

    def summary(self) -> dict:
        return {
            "status": self.status,
            "best_objective": self.best_objective,
            "surrogate": self.surrogate,
            "overlap": abs(self.overlap),
            "optimal": self.optimal,
            "hierarchy_verdict": self.hierarchy.verdict,
            "restarts": len(self.trace),
            "converged_restarts": sum(r.converged for r in self.trace),
            "config": self.config.to_dict(),
        }


def _worker_count(n_jobs):
    if n_jobs is not None:
        return max(1, int(n_jobs))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


class _Problem:
    """Picklable objective for one (pair, mode count)."""

    def __init__(self, plus: PureState, minus: PureState, n_modes: int):
        self.n = n_modes
        self.n_rot = n_modes * (n_modes - 1) // 2
        self.plan = TransformPlan([plus, minus])
        # output phases do not change click statistics; keep them at zero
        self._zeros = np.zeros(n_modes)

    def matrix(self, x) -> np.ndarray:
        return mesh_matrix(self.n, x[:self.n_rot], np.concatenate([x[self.n_rot:], self._zeros]))

    def surrogate(self, x) -> float:
        amps = self.plan.amplitudes(self.matrix(x))
        return float(np.sum(np.abs(amps[0]) * np.abs(amps[1])))

    def failure(self, x, tol: float) -> float:
        amps = np.abs(self.plan.amplitudes(self.matrix(x)))
        both = (amps[0] > tol) & (amps[1] > tol)
        return float(0.5 * np.sum(amps[0][both] ** 2 + amps[1][both] ** 2))


def _run_restart(problem: _Problem, index: int, x0, config: SearchConfig):
    budget = config.max_iter
    x, best, evals, converged = np.asarray(x0, dtype=float), math.inf, 0, False
    # restart the simplex around the incumbent until it stops improving
    while budget > 0:
        res = minimize(problem.surrogate, x, method="Nelder-Mead",
                       options={"maxiter": budget, "xatol": 1e-10, "fatol": 1e-15,
                                "adaptive": problem.n > 2})
        evals += res.nfev
        budget -= res.nit
        improved = res.fun < best - 1e-16
        if res.fun <= best:
            x, best = res.x, res.fun
        converged = bool(res.success)
        if not improved:
            break
    objective = problem.failure(x, config.classification_tol)
    return RestartOutcome(index, objective, float(best), evals, converged), x


def _restart_job(args):
    return _run_restart(*args)


def minimize_failure(plus: PureState, minus: PureState, config: SearchConfig,
                     n_jobs: int | None = None, allow_orthogonal: bool = False) -> SearchResult:
    """Search circuits on ``config.n_modes`` modes for the smallest failure probability.

    Inputs with fewer modes are padded with vacuum modes. Results are
    deterministic for a fixed seed, whatever the number of workers.
    Orthogonal inputs are rejected unless ``allow_orthogonal`` is set, in
    which case the target is exact discrimination (failure 0) and the
    hierarchy reported is the orthogonal one.
    """
    if plus.n_modes != minus.n_modes:
        raise ValueError("states have different mode counts")
    if not (plus.normalized and minus.normalized):
        raise ValueError("inputs must be normalized")
    if config.n_modes < plus.n_modes:
        raise ValueError(f"n_modes={config.n_modes} is smaller than the {plus.n_modes} input modes")
    overlap = inner_product(plus, minus)
    if abs(overlap) <= 1e-10 and not allow_orthogonal:
        raise ValueError("inputs are orthogonal; pass allow_orthogonal=True to search for "
                         "exact discrimination")
    extra = config.n_modes - plus.n_modes
    plus, minus = embed_with_vacuum(plus, extra), embed_with_vacuum(minus, extra)
    problem = _Problem(plus, minus, config.n_modes)

    streams = np.random.SeedSequence(config.seed).spawn(config.restarts)
    starts = []
    for s in streams:
        rng = np.random.default_rng(s)
        starts.append(np.concatenate([rng.uniform(0, math.pi / 2, problem.n_rot),
                                      rng.uniform(0, 2 * math.pi, problem.n_rot)]))
    jobs = [(problem, i, x0, config) for i, x0 in enumerate(starts)]
    workers = min(_worker_count(n_jobs), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_restart_job, jobs))
    else:
        results = [_run_restart(*job) for job in jobs]

    trace = tuple(r for r, _ in results)
    best_i = min(range(len(results)), key=lambda i: (trace[i].objective, trace[i].surrogate, i))
    best_x = results[best_i][1]
    circuit = LinearCircuit(_frozen(problem.matrix(best_x)))
    log.info("search over %d modes: best failure %.12g after %d restarts",
             config.n_modes, trace[best_i].objective, len(trace))
    return _assemble(circuit, plus, minus, overlap, trace[best_i].surrogate, trace, config)


def _assemble(circuit, plus, minus, overlap, surrogate, trace, config) -> SearchResult:
    out_plus, out_minus = TransformPlan([plus, minus]).states(circuit.matrix)
    report = usd_report_from_outputs(out_plus, out_minus, overlap,
                                     abs_tol=config.classification_tol, opt_tol=config.tol)
    tol = ComplexTolerance(abs_tol=config.classification_tol, phase_tol=1e-6)
    if abs(overlap) <= tol.abs_tol:
        hierarchy = orthogonal_hierarchy(circuit, plus, minus, tol=tol)
    else:
        hierarchy = usd_hierarchy(circuit, plus, minus, tol=tol)
    objective = report.prob_fail_circuit
    return SearchResult(circuit, decompose_to_givens(circuit), objective, surrogate, overlap,
                        abs(objective - abs(overlap)) <= config.tol, report, hierarchy, trace,
                        config)


@dataclass(frozen=True)
class SweepRow:
    ancilla_label: str
    n_modes: int
    best_objective: float
    optimal: bool
    overlap: float
    exploratory: bool
    result: SearchResult


def ancilla_sweep(plus: PureState, minus: PureState, ancillas, config: SearchConfig,
                  n_jobs: int | None = None) -> list[SweepRow]:
    """Run :func:`minimize_failure` on signal (x) ancilla for each ``(label, ancilla)``.

    ``config.n_modes`` is a floor; each run uses at least the signal plus
    ancilla modes. Rows for photon-bearing ancillas are marked exploratory.
    """
    rows = []
    for label, anc in ancillas:
        p, m = tensor(plus, anc), tensor(minus, anc)
        n = max(config.n_modes, p.n_modes)
        cfg = SearchConfig(**{**config.to_dict(), "n_modes": n})
        res = minimize_failure(p, m, cfg, n_jobs=n_jobs)
        rows.append(SweepRow(label, n, res.best_objective, res.optimal, abs(res.overlap),
                             anc.max_photons > 0, res))
    return rows


def sweep_csv(rows) -> str:
    lines = ["ancilla_label,n_modes,best_objective,optimal,overlap"]
    for r in rows:
        lines.append(f"{r.ancilla_label},{r.n_modes},{r.best_objective!r},"
                     f"{str(r.optimal).lower()},{r.overlap!r}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ToyFeasibility:
    """Outcome of the sign analysis for alpha|20> +/- beta|11>.

    ``feasible_fixed_array`` False is a proof that no static circuit (with any
    number of extra vacuum modes) reaches the optimum. True only means the
    first- and second-order conditions do not exclude it.
    """

    alpha_sq: float
    beta_sq: float
    feasible_fixed_array: bool
    a: tuple
    b: tuple
    witness: LinearCircuit | None = None
    obstruction: str | None = None


def toy_feasibility(alpha: float, beta: float) -> ToyFeasibility:
    a2, b2 = float(alpha) ** 2, float(beta) ** 2
    if alpha <= 0 or beta <= 0 or abs(a2 + b2 - 1) > 1e-12:
        raise ValueError("need alpha, beta > 0 with alpha^2 + beta^2 = 1")
    vec_a = (2 * a2 - b2, -b2)
    vec_b = (a2, -2 * b2)
    eps = 1e-12
    if b2 - eps <= a2 < 2 * b2 - eps:
        # Rows nu = (|U_j1|^2, |U_j2|^2) sum to (1, 1) over j, so sum_j nu.b = a2 - 2 b2 < 0:
        # some row has nu.b < 0 while a non-negative sign is required.
        why = (f"alpha^2={a2:.6g} lies in [beta^2, 2 beta^2): the rows of any unitary "
               f"cannot all satisfy nu.b >= 0 with b=({vec_b[0]:.6g}, {vec_b[1]:.6g})")
        return ToyFeasibility(a2, b2, False, vec_a, vec_b, obstruction=why)
    witness = beam_splitter_50_50() if abs(a2 - 2 * b2) <= eps else None
    return ToyFeasibility(a2, b2, True, vec_a, vec_b, witness=witness)


def toy_parameters(plus: PureState, minus: PureState, tol: float = 1e-12):
    """(alpha, beta) if the pair is alpha|20> +/- beta|11> with real positive coefficients."""
    if plus.n_modes != 2 or set(plus.terms) != {(2, 0), (1, 1)} or set(minus.terms) != set(plus.terms):
        return None
    a, b = plus.amplitude((2, 0)), plus.amplitude((1, 1))
    if abs(minus.amplitude((2, 0)) - a) > tol or abs(minus.amplitude((1, 1)) + b) > tol:
        return None
    if abs(a.imag) > tol or abs(b.imag) > tol or a.real <= 0 or b.real <= 0:
        return None
    return a.real, b.real
