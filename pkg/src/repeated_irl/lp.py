"""Linear programs for choosing one reward out of a consistent set.

The selection rule rewards a large Q-value margin of the observed action over
every alternative, summed over states, minus an L1 penalty ``lam * |R|``.
With several experiments the margin of a state is the smallest one over all
experiments and alternative actions, so the variable count stays at ``3d``
(``R``, one margin ``t_s`` per state, one ``u_s >= |R(s)|`` per state) while
the constraint count grows with the experiments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.optimize

from .mdp import Environment, as_policy, q_gap_rows
from .polytope import ZERO_ROW_TOL, Box

DEFAULT_LAMBDA = 0.5
FULL_LAMBDAS = (0.05, 0.1, 0.5, 1.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """Maximize ``c . x`` subject to ``A_ub x <= b_ub`` and ``lo <= x <= hi``.

    ``bounds`` is one ``(lo, hi)`` pair per variable; ``None`` means unbounded.
    """

    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    bounds: tuple

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        A = np.asarray(self.A_ub, dtype=float).reshape(-1, c.size)
        b = np.asarray(self.b_ub, dtype=float).reshape(-1)
        bounds = tuple(self.bounds) if self.bounds is not None else ((0.0, None),) * c.size
        if A.shape[0] != b.size or len(bounds) != c.size:
            raise ValueError("inconsistent program dimensions")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A_ub", A)
        object.__setattr__(self, "b_ub", b)
        object.__setattr__(self, "bounds", bounds)

    @property
    def num_vars(self) -> int:
        return self.c.size

    def dump(self, fh) -> None:
        """Plain-text form: objective row, then one ``coeffs <= rhs`` line per row."""
        fmt = lambda v: " ".join(f"{x:.17g}" for x in v)
        fh.write(f"maximize {fmt(self.c)}\n")
        for row, rhs in zip(self.A_ub, self.b_ub):
            fh.write(f"{fmt(row)} <= {rhs:.17g}\n")
        for j, (lo, hi) in enumerate(self.bounds):
            fh.write(f"x{j} in [{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}]\n")


@dataclass(frozen=True, eq=False)
class LPResult:
    x: np.ndarray | None
    objective: float
    status: str
    message: str = ""


def solve_lp(lp: LinearProgram, method: str = "highs") -> LPResult:
    """Solve ``lp`` with HiGHS or with the built-in dense simplex (``method="simplex"``)."""
    if method == "simplex":
        return _dense_simplex(lp)
    if method != "highs":
        raise ValueError(f"unknown method {method!r}")
    res = scipy.optimize.linprog(
        -lp.c,
        A_ub=lp.A_ub if lp.A_ub.size else None,
        b_ub=lp.b_ub if lp.A_ub.size else None,
        bounds=lp.bounds,
        method="highs",
    )
    if res.status == 0:
        return LPResult(res.x, float(lp.c @ res.x), OPTIMAL, res.message)
    if res.status == 2:
        return LPResult(None, float("nan"), INFEASIBLE, res.message)
    if res.status == 3:
        return LPResult(None, float("inf"), UNBOUNDED, res.message)
    raise SolverError(f"HiGHS failed (status {res.status}): {res.message}")


# -- dense two-phase simplex with Bland's rule -------------------------------

_EPS = 1e-9


def _pivot(T: np.ndarray, basis: list, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]
    basis[row] = col


def _run_simplex(T: np.ndarray, basis: list, allowed: np.ndarray, max_iter: int) -> str:
    """Maximize the objective held in the last row (as negated reduced costs)."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        candidates = np.flatnonzero((T[-1, :-1] < -_EPS) & allowed)
        if candidates.size == 0:
            return OPTIMAL
        col = candidates[0]
        column = T[:m, col]
        ratios = np.full(m, np.inf)
        pos = column > _EPS
        ratios[pos] = T[:m, -1][pos] / column[pos]
        if not np.isfinite(ratios).any():
            return UNBOUNDED
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + _EPS * max(1.0, abs(best)))
        row = min(ties, key=lambda i: basis[i])
        _pivot(T, basis, row, col)
    raise SolverError("simplex iteration limit reached")


def _dense_simplex(lp: LinearProgram, max_iter: int = 50_000) -> LPResult:
    n = lp.num_vars
    # x = shift + M y with y >= 0: lower-bounded vars shift, upper-only flip, free split
    cols, shift = [], np.zeros(n)
    extra_rows, extra_rhs = [], []
    for j, (lo, hi) in enumerate(lp.bounds):
        e = np.zeros(n)
        e[j] = 1.0
        if lo is not None:
            shift[j] = lo
            cols.append(e)
            if hi is not None:
                extra_rows.append(len(cols) - 1)
                extra_rhs.append(hi - lo)
        elif hi is not None:
            shift[j] = hi
            cols.append(-e)
        else:
            cols.extend([e, -e])
    M = np.array(cols).T.reshape(n, -1)
    k = M.shape[1]
    A = lp.A_ub @ M
    b = lp.b_ub - lp.A_ub @ shift
    if extra_rows:
        U = np.zeros((len(extra_rows), k))
        U[np.arange(len(extra_rows)), extra_rows] = 1.0
        A = np.vstack([A, U])
        b = np.concatenate([b, extra_rhs])
    c = lp.c @ M
    m = A.shape[0]
    neg = np.flatnonzero(b < 0)
    num_art = neg.size
    # columns: y (k), slacks (m), artificials (num_art), rhs
    T = np.zeros((m + 1, k + m + num_art + 1))
    T[:m, :k] = A
    T[:m, k : k + m] = np.eye(m)
    T[:m, -1] = b
    T[neg, :-1] *= -1.0
    T[neg, -1] *= -1.0
    basis = list(range(k, k + m))
    for a, i in enumerate(neg):
        T[i, k + m + a] = 1.0
        basis[i] = k + m + a
    all_cols = np.ones(T.shape[1] - 1, dtype=bool)
    if num_art:
        T[-1, k + m : k + m + num_art] = 1.0
        for i in neg:
            T[-1] -= T[i]
        _run_simplex(T, basis, all_cols, max_iter)
        if T[-1, -1] < -1e-7 * max(1.0, np.abs(b).max()):
            return LPResult(None, float("nan"), INFEASIBLE, "phase 1 optimum is positive")
        for i in range(m):
            if basis[i] >= k + m:
                nz = np.flatnonzero(np.abs(T[i, : k + m]) > _EPS)
                if nz.size:
                    _pivot(T, basis, i, nz[0])
    allowed = all_cols.copy()
    allowed[k + m :] = False
    T[-1] = 0.0
    T[-1, :k] = -c
    for i in range(m):
        if basis[i] < k + m and T[-1, basis[i]] != 0.0:
            T[-1] -= T[-1, basis[i]] * T[i]
    status = _run_simplex(T, basis, allowed, max_iter)
    if status == UNBOUNDED:
        return LPResult(None, float("inf"), UNBOUNDED, "objective unbounded")
    y = np.zeros(T.shape[1] - 1)
    for i, j in enumerate(basis):
        y[j] = T[i, -1]
    x = shift + M @ y[:k]
    return LPResult(x, float(lp.c @ x), OPTIMAL, "dense simplex")


# -- reward selection --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SelectionResult:
    reward: np.ndarray | None
    objective: float
    status: str


def _unique_rows(M: np.ndarray) -> np.ndarray:
    if M.shape[0] == 0:
        return M
    _, first = np.unique(np.round(M, 12), axis=0, return_index=True)
    return M[np.sort(first)]


def selection_program(experiments: Sequence[tuple[Environment, Sequence[int]]], lam: float, bounds) -> LinearProgram:
    """Encode the multi-experiment selection rule over ``z = (R, t, u)``."""
    if not experiments:
        raise ValueError("need at least one experiment")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    box = bounds if isinstance(bounds, Box) else Box(*bounds)
    d = experiments[0][0].num_states
    margin_rows, has_margin = [], np.zeros(d, dtype=bool)
    for env, pi in experiments:
        if env.num_states != d:
            raise ValueError("experiments disagree on the number of states")
        pi = as_policy(env, pi)
        G = q_gap_rows(env, pi)
        states, actions = np.nonzero(np.arange(env.num_actions)[None, :] != pi[:, None])
        # a margin row is [-w | e_s | 0]: t_s - w . R <= 0
        rows = G[actions, states]
        # alternatives with the same dynamics as pi(s) give identically zero rows
        keep = np.max(np.abs(rows), axis=1) >= ZERO_ROW_TOL
        states, rows = states[keep], rows[keep]
        block = np.zeros((states.size, 2 * d))
        block[:, :d] = -rows
        block[np.arange(states.size), d + states] = 1.0
        margin_rows.append(block)
        has_margin[states] = True
    margins = _unique_rows(np.vstack(margin_rows))
    W = _unique_rows(-margins[:, :d])

    eye = np.eye(d)
    zeros = np.zeros((d, d))
    A = np.vstack(
        [
            np.hstack([-W, np.zeros((W.shape[0], 2 * d))]),
            np.hstack([margins, np.zeros((margins.shape[0], d))]),
            np.hstack([eye, zeros, -eye]),
            np.hstack([-eye, zeros, -eye]),
        ]
    )
    b = np.zeros(A.shape[0])
    c = np.concatenate([np.zeros(d), np.ones(d), -lam * np.ones(d)])
    bounds = (
        [(box.low, box.high)] * d
        + [(None, None) if has_margin[s] else (None, 0.0) for s in range(d)]
        + [(0.0, None)] * d
    )
    return LinearProgram(c, A, b, tuple(bounds))


def select_generalized(experiments, lam: float = DEFAULT_LAMBDA, bounds=(-10.0, 10.0), method: str = "highs") -> SelectionResult:
    """Pick the reward in the consistent set that best explains every experiment.

    ``experiments`` is a sequence of ``(environment, policy)`` pairs.
    """
    lp = selection_program(experiments, lam, bounds)
    res = solve_lp(lp, method)
    if res.status != OPTIMAL:
        # the zero reward is always feasible with bounded objective
        raise SolverError(f"selection program reported {res.status}: {res.message}")
    d = experiments[0][0].num_states
    return SelectionResult(res.x[:d].copy(), res.objective, res.status)


def select_classic(env: Environment, pi, lam: float = DEFAULT_LAMBDA, bounds=(-10.0, 10.0), method: str = "highs") -> SelectionResult:
    """Single-environment selection: the multi-experiment rule with one experiment."""
    return select_generalized([(env, pi)], lam, bounds, method)
