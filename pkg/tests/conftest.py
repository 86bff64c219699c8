"""Shared fixtures and independent oracles for the test suite."""

import itertools
import math

import numpy as np
import pytest

from dephase_lab.fock import PureState, build_pure_state, patterns_with_total


def permanent(m):
    """Permanent by summing over permutations; fine for the 4x4 sizes used here."""
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    return sum(math.prod(m[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def oracle_amplitude(u, n_in, n_out):
    """<n_out| U |n_in> for a circuit sending a photon in mode i to sum_j U[j, i] |j>."""
    if sum(n_in) != sum(n_out):
        return 0j
    cols = [i for i, k in enumerate(n_in) for _ in range(k)]
    rows = [j for j, k in enumerate(n_out) for _ in range(k)]
    sub = np.asarray(u)[np.ix_(rows, cols)]
    norm = math.sqrt(math.prod(math.factorial(k) for k in n_in)
                     * math.prod(math.factorial(k) for k in n_out))
    return permanent(sub) / norm


def oracle_transform(u, state: PureState) -> dict:
    """Output amplitudes by brute force over every pattern of matching photon number."""
    out = {}
    for n_in, amp in state.terms.items():
        for n_out in patterns_with_total(state.n_modes, sum(n_in)):
            out[tuple(n_out)] = out.get(tuple(n_out), 0j) + amp * oracle_amplitude(u, n_in, n_out)
    return out


def random_fixed_n_state(rng, n_modes, photons, support=None):
    """Random normalized state with exactly ``photons`` photons."""
    pats = list(patterns_with_total(n_modes, photons))
    if support is not None and support < len(pats):
        idx = rng.choice(len(pats), size=support, replace=False)
        pats = [pats[i] for i in sorted(idx)]
    amps = rng.normal(size=len(pats)) + 1j * rng.normal(size=len(pats))
    amps /= np.linalg.norm(amps)
    return build_pure_state(n_modes, list(zip(pats, amps)))


def toy_pair(alpha_sq):
    a, b = math.sqrt(alpha_sq), math.sqrt(1 - alpha_sq)
    plus = build_pure_state(2, [((2, 0), a), ((1, 1), b)])
    minus = build_pure_state(2, [((2, 0), a), ((1, 1), -b)])
    return plus, minus


@pytest.fixture
def toy():
    return toy_pair(2 / 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


ACCEPTANCE_LINES = []


def report_criterion(number, ok, detail):
    """Record one acceptance line; they are printed at the end of the run."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
