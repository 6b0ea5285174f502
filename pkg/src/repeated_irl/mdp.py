"""Finite reward-free MDPs, optimal policies and the Ng-Russell optimality constraints.

Rewards attach to states: an agent collects ``R(s)`` when it occupies ``s``, so
the value of a policy ``pi`` is ``V = (I - gamma * P_pi)^{-1} R`` and the value of
taking action ``a`` in ``s`` is ``Q(s, a) = R(s) + gamma * P_a(s) . V``.

Policies are integer arrays of action indices; the lowest index wins every tie.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

STOCHASTIC_ATOL = 1e-9
DEFAULT_TOL = 1e-10
MAX_ITER = 100_000


class InvalidPolicyError(ValueError):
    """A policy references an action the environment does not have."""


class RewardDomainError(ValueError):
    """A reward vector has the wrong length or non-finite entries."""


@dataclass(frozen=True, eq=False)
class Environment:
    """An MDP without a reward: per-action transition matrices and a discount.

    ``transitions[a]`` is the ``d x d`` row-stochastic matrix of action ``a``.
    """

    transitions: np.ndarray
    gamma: float
    actions: tuple[str, ...] = ()

    def __post_init__(self):
        P = np.array(self.transitions, dtype=float)
        if P.ndim != 3 or P.shape[1] != P.shape[2] or P.shape[0] < 1:
            raise ValueError(f"transitions must have shape (A, d, d), got {P.shape}")
        if not np.all(np.isfinite(P)) or np.any(P < 0):
            raise ValueError("transition probabilities must be finite and nonnegative")
        if not np.allclose(P.sum(axis=2), 1.0, rtol=0, atol=STOCHASTIC_ATOL):
            raise ValueError("every transition row must sum to 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.gamma}")
        actions = tuple(self.actions) or tuple(f"a{i}" for i in range(P.shape[0]))
        if len(actions) != P.shape[0] or len(set(actions)) != len(actions):
            raise ValueError("need one distinct action name per transition matrix")
        P.setflags(write=False)
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "actions", actions)

    @property
    def num_states(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[0]

    @cached_property
    def successors(self) -> np.ndarray | None:
        """``(A, d)`` next-state table when every row is one-hot, else None."""
        P = self.transitions
        nxt = P.argmax(axis=2)
        if np.all(np.take_along_axis(P, nxt[..., None], axis=2) == 1.0):
            return nxt
        return None

    def action_index(self, action: int | str) -> int:
        if isinstance(action, str):
            try:
                return self.actions.index(action)
            except ValueError:
                raise InvalidPolicyError(f"unknown action {action!r}") from None
        a = int(action)
        if not 0 <= a < self.num_actions:
            raise InvalidPolicyError(f"action index {a} out of range")
        return a

    def to_dict(self) -> dict:
        return {
            "d": self.num_states,
            "gamma": self.gamma,
            "actions": list(self.actions),
            "transitions": {a: self.transitions[i].tolist() for i, a in enumerate(self.actions)},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Environment":
        actions = list(data["actions"])
        P = np.array([data["transitions"][a] for a in actions], dtype=float)
        if P.shape[1] != int(data["d"]):
            raise ValueError("'d' disagrees with the transition matrices")
        return cls(P, float(data["gamma"]), tuple(actions))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Environment":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PartialPolicy:
    """Actions observed on a subset of states (e.g. the states a trajectory visited)."""

    actions: Mapping[int, int] = field(default_factory=dict)

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(self.actions)

    def complete(self, num_states: int, fill: int = 0) -> np.ndarray:
        """Full policy agreeing with the observations, ``fill`` elsewhere."""
        pi = np.full(num_states, fill, dtype=int)
        for s, a in self.actions.items():
            pi[s] = a
        return pi

    def agrees_with(self, pi: Sequence[int]) -> bool:
        return all(int(pi[s]) == a for s, a in self.actions.items())


def as_policy(env: Environment, pi) -> np.ndarray:
    """Validate ``pi`` against ``env`` and return it as an int array."""
    if isinstance(pi, Mapping):
        if set(pi) != set(range(env.num_states)):
            raise InvalidPolicyError("policy must assign an action to every state")
        pi = [pi[s] for s in range(env.num_states)]
    out = np.array([env.action_index(a) for a in pi], dtype=int)
    if out.shape != (env.num_states,):
        raise InvalidPolicyError(f"policy has {out.size} entries for {env.num_states} states")
    return out


def _as_reward(env: Environment, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (env.num_states,):
        raise RewardDomainError(f"reward has shape {r.shape}, expected ({env.num_states},)")
    if not np.all(np.isfinite(r)):
        raise RewardDomainError("reward entries must be finite")
    return r


def policy_matrix(env: Environment, pi) -> np.ndarray:
    """Matrix whose row ``s`` is row ``s`` of ``P_{pi(s)}``."""
    pi = as_policy(env, pi)
    return env.transitions[pi, np.arange(env.num_states)]


def _backup(env: Environment, V: np.ndarray) -> np.ndarray:
    """``P_a V`` for every action; V is ``(d,)`` or ``(d, n)``, result ``(A, d[, n])``."""
    nxt = env.successors
    if nxt is not None:
        return V[nxt]
    return np.einsum("asj,j...->as...", env.transitions, V)


def q_values(env: Environment, r, V) -> np.ndarray:
    """``(d, A)`` table of ``R(s) + gamma * P_a(s) . V``."""
    r = _as_reward(env, r)
    return r[:, None] + env.gamma * _backup(env, np.asarray(V, dtype=float)).T


def policy_values(env: Environment, pi, r) -> np.ndarray:
    """Exact ``(I - gamma P_pi)^{-1} R`` via dense LU."""
    r = _as_reward(env, r)
    A = np.eye(env.num_states) - env.gamma * policy_matrix(env, pi)
    return scipy.linalg.lu_solve(scipy.linalg.lu_factor(A), r)


def value_iteration(env: Environment, R, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER) -> np.ndarray:
    """Optimal values for one reward ``(d,)`` or a batch of rewards ``(d, n)``.

    Stops once the sup-norm Bellman residual is at most ``tol``.
    """
    R = np.asarray(R, dtype=float)
    V = R / (1.0 - env.gamma)
    for _ in range(max_iter):
        V_new = R + env.gamma * _backup(env, V).max(axis=0)
        if np.max(np.abs(V_new - V), initial=0.0) <= tol:
            return V_new
        V = V_new
    raise RuntimeError(f"value iteration did not reach residual {tol} in {max_iter} sweeps")


def greedy_actions(Q: np.ndarray, tol: float) -> np.ndarray:
    """Lowest action index whose value is within ``tol`` of the best, per row of ``Q``."""
    best = Q.max(axis=-1, keepdims=True)
    return np.argmax(Q >= best - tol, axis=-1)


def solve_optimal(env: Environment, r, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Deterministic optimal policy, ties broken toward the lowest action index.

    Value iteration to residual ``tol``, then exact policy evaluation and
    improvement until the greedy policy is stable, so that near-ties are judged
    on exact values rather than on iteration noise.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r = _as_reward(env, r)
    V = value_iteration(env, r, tol)
    pi = greedy_actions(q_values(env, r, V), tol)
    for _ in range(100):
        V = policy_values(env, pi, r)
        new_pi = greedy_actions(q_values(env, r, V), tol)
        if np.array_equal(new_pi, pi):
            break
        pi = new_pi
    return pi


def optimal_set(env: Environment, r, tol: float = 1e-8) -> frozenset[tuple[int, int]]:
    """All ``(state, action)`` pairs whose Q-value is within ``tol`` of the state's best."""
    return frozenset((int(s), int(a)) for s, a in zip(*np.nonzero(optimal_mask(env, r, tol))))


def optimal_mask(env: Environment, r, tol: float = 1e-8) -> np.ndarray:
    """Boolean ``(d, A)`` form of :func:`optimal_set`."""
    r = _as_reward(env, r)
    pi = solve_optimal(env, r, min(tol, DEFAULT_TOL))
    Q = q_values(env, r, policy_values(env, pi, r))
    return Q >= Q.max(axis=1, keepdims=True) - tol


def q_gap_rows(env: Environment, pi) -> np.ndarray:
    """``(A, d, d)`` stack of ``(P_pi - P_a)(I - gamma P_pi)^{-1}``.

    Row ``s`` of slice ``a`` applied to a reward gives
    ``(Q(s, pi(s)) - Q(s, a)) / gamma`` under ``pi``.
    """
    P_pi = policy_matrix(env, pi)
    d = env.num_states
    lu = scipy.linalg.lu_factor(np.eye(d) - env.gamma * P_pi)
    inv = scipy.linalg.lu_solve(lu, np.eye(d))
    return (P_pi[None] - env.transitions) @ inv


def ng_russell_constraints(env: Environment, pi, return_index: bool = False):
    """Linear constraints ``w . R >= 0`` that hold exactly when ``pi`` is optimal.

    One row per state and per action other than ``pi(s)`` (those rows are
    identically zero), ordered by state then action. With ``return_index`` the
    ``(state, action)`` label of each row is returned too.
    """
    pi = as_policy(env, pi)
    G = q_gap_rows(env, pi)
    if not np.all(np.isfinite(G)):
        raise np.linalg.LinAlgError("I - gamma * P_pi is numerically singular")
    states, actions = np.nonzero(np.arange(env.num_actions)[None, :] != pi[:, None])
    rows = G[actions, states]
    if return_index:
        return rows, np.stack([states, actions], axis=1)
    return rows


def is_optimal(env: Environment, pi, r, tol: float = 1e-8) -> bool:
    """True iff every Ng-Russell constraint value of ``pi`` under ``r`` is at least ``-tol``."""
    r = _as_reward(env, r)
    rows = ng_russell_constraints(env, pi)
    return bool(np.all(rows @ r >= -tol))
