"""Reward identification when the experimenter may build arbitrary dynamics.

Two stages, each a binary search over cheap two-action environments:

1. Tournaments between pairs of states (stay vs. swap) find a best and a worst
   state, halving the candidates with every experiment.
2. In each remaining state the agent chooses between staying put and a gamble
   that lands in the worst state with probability ``alpha`` and in the best
   state otherwise. Its choice brackets the break-even ``alpha`` of every
   state at once, so all bisections advance within one experiment.

The estimate sets the worst state to 0, the best to 1 and every other state
to ``1 - alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .mdp import Environment, as_policy

STAY, SWAP = 0, 1
GAMBLE, KEEP = 0, 1
ACTIONS = ("a1", "a2")
DEFAULT_GAMMA = 0.8

Query = Callable[[Environment], Sequence[int]]


def comparison_environment(d: int, pairs: Iterable[tuple[int, int]], gamma: float = DEFAULT_GAMMA) -> Environment:
    """``a1`` stays put everywhere; ``a2`` swaps the members of each pair."""
    P = np.zeros((2, d, d))
    P[STAY] = np.eye(d)
    P[SWAP] = np.eye(d)
    for s, t in pairs:
        P[SWAP, s, s] = P[SWAP, t, t] = 0.0
        P[SWAP, s, t] = P[SWAP, t, s] = 1.0
    return Environment(P, gamma, ACTIONS)


def gamble_environment(
    d: int, s_min: int, s_max: int, alphas: Sequence[float], gamma: float = DEFAULT_GAMMA
) -> Environment:
    """``a1`` gambles from each non-extreme state: worst w.p. ``alphas[s]``, else best.

    ``a2`` is a self-loop everywhere; both extremes are absorbing.
    """
    if s_min == s_max:
        raise ValueError("best and worst state must differ")
    P = np.zeros((2, d, d))
    P[KEEP] = np.eye(d)
    for s in range(d):
        if s in (s_min, s_max):
            P[GAMBLE, s, s] = 1.0
        else:
            P[GAMBLE, s, s_min] = alphas[s]
            P[GAMBLE, s, s_max] += 1.0 - alphas[s]
    return Environment(P, gamma, ACTIONS)


def with_extra_actions(env: Environment, num_actions: int, copy_of: int = 1) -> Environment:
    """Pad a two-action environment with duplicates of action ``copy_of``."""
    if num_actions < env.num_actions:
        raise ValueError("cannot drop actions")
    n_extra = num_actions - env.num_actions
    extra = np.repeat(env.transitions[copy_of][None], n_extra, axis=0)
    names = env.actions + tuple(f"dup{i}" for i in range(n_extra))
    return Environment(np.concatenate([env.transitions, extra]), env.gamma, names)


@dataclass
class Transcript:
    entries: list = field(default_factory=list)

    def record(self, env: Environment, pi) -> None:
        self.entries.append({"environment": env.to_dict(), "observed_policy": [int(a) for a in pi]})

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class IdentificationResult:
    estimate: np.ndarray
    s_min: int
    s_max: int
    alphas: np.ndarray
    intervals: np.ndarray
    experiments_used: int
    transcript: list


def experiment_bound(d: int, epsilon: float) -> int:
    return 2 * math.ceil(math.log2(d)) + math.ceil(math.log2(1.0 / epsilon))


def _ask(query: Query, env: Environment, transcript: Transcript | None) -> np.ndarray:
    pi = as_policy(env, query(env))
    if transcript is not None:
        transcript.record(env, pi)
    return pi


def find_extreme_state(
    query: Query,
    d: int,
    candidates: Iterable[int] | None = None,
    mode: str = "max",
    gamma: float = DEFAULT_GAMMA,
    transcript: Transcript | None = None,
) -> tuple[int, list]:
    """Knock-out tournament for a best (``mode="max"``) or worst state.

    Returns the winner and the list of ``(environment, policy)`` experiments.
    Staying at ``s`` rather than swapping to ``t`` reveals ``R(s) >= R(t)``.
    """
    if mode not in ("max", "min"):
        raise ValueError(f"mode must be 'max' or 'min', got {mode!r}")
    alive = list(range(d)) if candidates is None else list(candidates)
    if not alive:
        raise ValueError("no candidates")
    experiments = []
    while len(alive) > 1:
        pairs = list(zip(alive[0::2], alive[1::2]))
        env = comparison_environment(d, pairs, gamma)
        pi = _ask(query, env, transcript)
        experiments.append((env, pi))
        survivors = []
        for s, t in pairs:
            s_at_least_t = pi[s] == STAY
            survivors.append(s if s_at_least_t == (mode == "max") else t)
        if len(alive) % 2:
            survivors.append(alive[-1])
        alive = survivors
    return alive[0], experiments


def binary_search_alphas(
    query: Query,
    d: int,
    s_min: int,
    s_max: int,
    epsilon: float,
    gamma: float = DEFAULT_GAMMA,
    transcript: Transcript | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Bisect every state's break-even gamble probability in parallel.

    Returns the midpoint estimates, the final ``[lo, hi]`` intervals (one row
    per state) and the number of experiments run. An indifferent agent may
    answer either way; both answers keep the true value inside its interval.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if s_min == s_max:
        raise ValueError("best and worst state must differ")
    lo, hi = np.zeros(d), np.ones(d)
    others = np.array([s for s in range(d) if s not in (s_min, s_max)], dtype=int)
    rounds = math.ceil(math.log2(1.0 / epsilon)) if others.size else 0
    for _ in range(rounds):
        mid = 0.5 * (lo + hi)
        pi = _ask(query, gamble_environment(d, s_min, s_max, mid, gamma), transcript)
        took_gamble = pi[others] == GAMBLE
        # gambling means the lottery is worth at least R(s): the true alpha is >= mid
        lo[others] = np.where(took_gamble, mid[others], lo[others])
        hi[others] = np.where(took_gamble, hi[others], mid[others])
    lo[[s_min, s_max]] = hi[[s_min, s_max]] = (1.0, 0.0)
    return 0.5 * (lo + hi), np.stack([lo, hi], axis=1), rounds


def identify(query: Query, d: int, epsilon: float, gamma: float = DEFAULT_GAMMA) -> IdentificationResult:
    """Estimate the canonical hidden reward to within ``epsilon`` in sup norm."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if d < 1:
        raise ValueError("need at least one state")
    transcript = Transcript()
    if d == 1:
        return IdentificationResult(np.zeros(1), 0, 0, np.zeros(1), np.zeros((1, 2)), 0, [])
    s_max, _ = find_extreme_state(query, d, mode="max", gamma=gamma, transcript=transcript)
    s_min, _ = find_extreme_state(query, d, mode="min", gamma=gamma, transcript=transcript)
    if s_min == s_max:
        # only possible when every comparison was a tie, i.e. a constant reward
        s_min = (s_max + 1) % d
    alphas, intervals, _ = binary_search_alphas(query, d, s_min, s_max, epsilon, gamma, transcript)
    estimate = 1.0 - alphas
    return IdentificationResult(estimate, s_min, s_max, alphas, intervals, len(transcript), transcript.entries)
