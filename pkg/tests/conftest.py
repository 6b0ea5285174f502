import itertools

import numpy as np
import pytest

from repeated_irl.mdp import Environment, policy_values


def random_env(rng, d, A, gamma=None, sparse=False):
    P = rng.random((A, d, d))
    if sparse:
        P *= rng.random((A, d, d)) < 0.5
        P[:, np.arange(d), rng.integers(d, size=d)] += 0.1
    P /= P.sum(axis=2, keepdims=True)
    return Environment(P, rng.uniform(0.3, 0.95) if gamma is None else gamma)


def brute_force_values(env, r):
    """Exact values of every deterministic policy: ``{policy tuple: V}``."""
    return {
        pi: policy_values(env, np.array(pi), r)
        for pi in itertools.product(range(env.num_actions), repeat=env.num_states)
    }


def brute_force_optimal(env, r, tol=1e-8):
    """Policies whose value matches the pointwise best value everywhere within ``tol``."""
    values = brute_force_values(env, r)
    best = np.max(np.stack(list(values.values())), axis=0)
    return {pi for pi, v in values.items() if np.all(v >= best - tol)}


@pytest.fixture
def two_state():
    """a1 stays, a2 swaps; discount 0.5."""
    P = np.array([np.eye(2), [[0.0, 1.0], [1.0, 0.0]]])
    return Environment(P, 0.5, ("a1", "a2"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


def record_criterion(label, ok, detail: str) -> None:
    """Remember one acceptance outcome for the end-of-run report.

    ``ok`` is a bool, or a status string such as ``"SKIPPED"``.
    """
    ACCEPTANCE[str(label)] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    order = lambda label: (int(label.split()[0]), label)
    for label in sorted(ACCEPTANCE, key=order):
        ok, detail = ACCEPTANCE[label]
        status = "PASS" if ok is True else ("FAIL" if ok is False else ok)
        terminalreporter.write_line(f"criterion {label}: {status}: {detail}")
