"""A simulated, perfectly rational agent with a hidden reward."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .mdp import DEFAULT_TOL, Environment, solve_optimal


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[tuple[int, int], ...]
    env_id: str | int | None = None

    @property
    def horizon(self) -> int:
        return len(self.steps)

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(s for s, _ in self.steps)

    def to_json(self) -> str:
        return json.dumps([[int(s), int(a)] for s, a in self.steps])

    @classmethod
    def from_json(cls, text: str, env_id=None) -> "Trajectory":
        return cls(tuple((int(s), int(a)) for s, a in json.loads(text)), env_id)


class Agent:
    """Answers environment queries with its optimal behavior under ``hidden_reward``.

    Ties between optimal actions go to the lowest action index.
    """

    def __init__(self, hidden_reward, tol: float = DEFAULT_TOL, bounds: tuple[float, float] | None = None):
        r = np.array(hidden_reward, dtype=float)
        if r.ndim != 1 or not np.all(np.isfinite(r)):
            raise ValueError("hidden reward must be a finite vector")
        if bounds is not None and (r.min() < bounds[0] or r.max() > bounds[1]):
            raise ValueError("hidden reward lies outside its box")
        r.setflags(write=False)
        self.hidden_reward = r
        self.tol = tol

    @property
    def num_states(self) -> int:
        return self.hidden_reward.size

    def _check(self, env: Environment) -> None:
        if env.num_states != self.num_states:
            raise ValueError(f"environment has {env.num_states} states, agent expects {self.num_states}")

    def respond_policy(self, env: Environment) -> np.ndarray:
        self._check(env)
        return solve_optimal(env, self.hidden_reward, self.tol)

    __call__ = respond_policy

    def respond_trajectories(
        self,
        env: Environment,
        num_traj: int,
        horizon: int | None = None,
        start_dist=None,
        seed: int | None = None,
        env_id=None,
    ) -> list[Trajectory]:
        """Roll out the optimal policy; horizon defaults to three times the state count."""
        self._check(env)
        d = env.num_states
        horizon = 3 * d if horizon is None else horizon
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        p0 = np.full(d, 1.0 / d) if start_dist is None else np.asarray(start_dist, dtype=float)
        if p0.shape != (d,) or np.any(p0 < 0) or not np.isclose(p0.sum(), 1.0):
            raise ValueError("start distribution must be a probability vector over states")
        rng = np.random.default_rng(seed)
        pi = self.respond_policy(env)
        nxt = env.successors
        out = []
        for _ in range(num_traj):
            s = int(rng.choice(d, p=p0))
            steps = []
            for _ in range(horizon):
                a = int(pi[s])
                steps.append((s, a))
                s = int(nxt[a, s]) if nxt is not None else int(rng.choice(d, p=env.transitions[a, s]))
            out.append(Trajectory(tuple(steps), env_id))
        return out
