"""Choosing which environments to show the agent.

``run_greedy`` picks, each round, the candidate maze whose worst-case
observation removes the largest share of the currently consistent rewards.
The share is estimated on a hit-and-run cloud of the consistent set, and the
worst case ranges over the cloud: each sampled reward stands for the policy
an agent holding it would show. ``run_nonadaptive`` is the baseline that just
draws mazes from a fixed distribution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .agent import Agent, Trajectory
from .gridworld import MazeDistribution, compile_maze
from .mdp import Environment, PartialPolicy, as_policy, greedy_actions, ng_russell_constraints, value_iteration
from .polytope import (
    DEFAULT_BURN_IN,
    DEFAULT_THINNING,
    MEMBERSHIP_TOL,
    Box,
    ConsistentSet,
    SampleCloud,
    add_experiment,
    empty_set,
    estimate_f,
    hit_and_run_sample,
)

Observer = Callable[[Environment], np.ndarray]

_SCORE_VI_TOL = 1e-12
_TIE_TOL = 1e-10
_CHUNK = 64


class InconsistentObservationError(ValueError):
    """Trajectories disagree about the action taken in some state."""


@dataclass(frozen=True)
class GreedyConfig:
    budget: int = 25
    num_candidates: int = 10
    num_samples: int = 1000
    burn_in: int = DEFAULT_BURN_IN
    thinning: int = DEFAULT_THINNING
    seed: int = 0

    def __post_init__(self):
        if self.budget < 0 or self.num_candidates < 1 or self.num_samples < 1:
            raise ValueError("budget must be >= 0; candidates and samples >= 1")


@dataclass
class ExperimentLog:
    consistent_set: ConsistentSet
    experiments: list = field(default_factory=list)
    env_ids: list = field(default_factory=list)
    f_estimates: list = field(default_factory=list)
    gains: list = field(default_factory=list)
    scores: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    sources: list = field(default_factory=list)

    @property
    def f(self) -> float:
        return self.f_estimates[-1] if self.f_estimates else 0.0

    def __len__(self) -> int:
        return len(self.experiments)

    def commit(
        self, env: Environment, pi, env_id, gain=float("nan"), score=float("nan"), wall_ms=0.0, source=None
    ) -> "ExperimentLog":
        pi = as_policy(env, pi)
        k = add_experiment(self.consistent_set, env, pi, tag=env_id)
        f_new = self.f + (1.0 - self.f) * gain if np.isfinite(gain) else float("nan")
        return replace(
            self,
            consistent_set=k,
            experiments=self.experiments + [(env, pi)],
            env_ids=self.env_ids + [env_id],
            f_estimates=self.f_estimates + [f_new],
            gains=self.gains + [gain],
            scores=self.scores + [score],
            wall_ms=self.wall_ms + [wall_ms],
            sources=self.sources + [source],
        )


def new_log(d: int, box: Box | tuple[float, float]) -> ExperimentLog:
    return ExperimentLog(empty_set(d, box))


def trajectory_proxy(env: Environment, trajectories: Sequence[Trajectory]) -> np.ndarray:
    """Full policy that repeats the observed actions and takes action 0 elsewhere."""
    seen: dict[int, int] = {}
    for traj in trajectories:
        for s, a in traj.steps:
            if seen.setdefault(int(s), int(a)) != int(a):
                raise InconsistentObservationError(f"state {s} shows actions {seen[int(s)]} and {a}")
    return as_policy(env, PartialPolicy(seen).complete(env.num_states))


def policy_observer(agent: Agent) -> Observer:
    return agent.respond_policy


def trajectory_observer(agent: Agent, num_traj: int = 10, horizon: int | None = None, seed: int = 0) -> Observer:
    """Observer that shows only sampled trajectories, filled in by :func:`trajectory_proxy`."""
    seeds = np.random.SeedSequence(seed)

    def observe(env: Environment) -> np.ndarray:
        (child,) = seeds.spawn(1)
        trajs = agent.respond_trajectories(env, num_traj, horizon, seed=child)
        return trajectory_proxy(env, trajs)

    return observe


def optimal_behavior(env: Environment, rewards: np.ndarray, mask_tol: float | None = None):
    """Optimal policies and optimal-action masks for a batch of rewards ``(n, d)``.

    Returns ``(policies (n, d), masks (n, d, A))``. ``masks[k, s, a]`` holds when
    ``a`` is optimal in ``s`` under ``rewards[k]``; the tolerance matches a
    constraint slack of :data:`MEMBERSHIP_TOL`.
    """
    R = np.asarray(rewards, dtype=float)
    mask_tol = env.gamma * MEMBERSHIP_TOL if mask_tol is None else mask_tol
    V = value_iteration(env, R.T, tol=_SCORE_VI_TOL * max(1.0, np.abs(R).max(initial=0.0)))
    nxt = env.successors
    PV = V[nxt] if nxt is not None else np.einsum("asj,jn->asn", env.transitions, V)
    Q = R[:, :, None] + env.gamma * np.transpose(PV, (2, 1, 0))
    masks = Q >= Q.max(axis=2, keepdims=True) - mask_tol
    return greedy_actions(Q, _TIE_TOL), masks


def survival_matrix(policies: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """``(u, n)`` table: does sample ``k`` stay consistent after observing policy ``j``."""
    d = masks.shape[1]
    states = np.arange(d)
    out = np.empty((policies.shape[0], masks.shape[0]), dtype=bool)
    for lo in range(0, policies.shape[0], _CHUNK):
        chunk = policies[lo : lo + _CHUNK]
        out[lo : lo + _CHUNK] = masks[:, states[None, :], chunk].all(axis=2).T
    return out


def worst_case_gain(env: Environment, cloud: SampleCloud) -> float:
    """Smallest share of ``cloud`` removed by any policy an agent drawn from ``cloud`` could show."""
    policies, masks = optimal_behavior(env, cloud.samples)
    unique = np.unique(policies, axis=0)
    survive = survival_matrix(unique, masks)
    return float(1.0 - survive.mean(axis=1).max())


def greedy_round(
    log: ExperimentLog,
    candidates: Sequence[Environment],
    cloud: SampleCloud,
    observe: Observer,
    candidate_ids: Sequence | None = None,
    sources: Sequence | None = None,
) -> tuple[Environment, np.ndarray, ExperimentLog]:
    """Score the candidates on ``cloud``, run the best one, commit what is observed.

    Ties go to the earliest candidate.
    """
    if not candidates:
        raise ValueError("no candidate environments")
    if len(cloud) == 0:
        raise ValueError("empty sample cloud")
    start = time.perf_counter()
    ids = list(range(len(candidates))) if candidate_ids is None else list(candidate_ids)
    scores = np.array([worst_case_gain(env, cloud) for env in candidates])
    best = int(np.argmax(scores))
    env = candidates[best]
    pi = as_policy(env, observe(env))
    gain = estimate_f(cloud, ng_russell_constraints(env, pi))
    wall_ms = 1000.0 * (time.perf_counter() - start)
    source = sources[best] if sources is not None else None
    log = log.commit(env, pi, ids[best], gain=gain, score=float(scores[best]), wall_ms=wall_ms, source=source)
    return env, pi, log


def run_greedy(
    config: GreedyConfig,
    universe: MazeDistribution,
    observe: Observer,
    n: int,
    gamma: float = 0.8,
    box: Box | tuple[float, float] = (-10.0, 10.0),
) -> ExperimentLog:
    """``config.budget`` greedy rounds with fresh candidates and a fresh cloud per round."""
    rng = np.random.default_rng(config.seed)
    log = new_log(n * n, box)
    for rnd in range(config.budget):
        cloud_seed = int(rng.integers(2**62))
        mazes = [universe.sample(n, gamma, rng) for _ in range(config.num_candidates)]
        start = time.perf_counter()
        cloud = hit_and_run_sample(log.consistent_set, config.num_samples, cloud_seed, config.burn_in, config.thinning)
        sample_ms = 1000.0 * (time.perf_counter() - start)
        _, _, log = greedy_round(
            log,
            [compile_maze(m) for m in mazes],
            cloud,
            observe,
            [f"{rnd}:{i}" for i in range(len(mazes))],
            mazes,
        )
        log.wall_ms[-1] += sample_ms
    return log


def run_nonadaptive(
    kind: str,
    budget: int,
    observe: Observer,
    n: int,
    gamma: float = 0.8,
    box: Box | tuple[float, float] = (-10.0, 10.0),
    seed: int = 0,
) -> ExperimentLog:
    """Show ``budget`` mazes drawn from the ``uniform`` or ``varied`` family."""
    rng = np.random.default_rng(seed)
    dist = MazeDistribution(kind)
    log = new_log(n * n, box)
    for rnd in range(budget):
        start = time.perf_counter()
        maze = dist.sample(n, gamma, rng)
        env = compile_maze(maze)
        pi = observe(env)
        log = log.commit(env, pi, f"{rnd}:0", wall_ms=1000.0 * (time.perf_counter() - start), source=maze)
    return log
