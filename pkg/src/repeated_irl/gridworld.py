"""Square mazes with five deterministic actions, and two random maze families.

Cell ``(r, c)`` is state ``r * n + c``. ``h_walls[r, c]`` blocks the edge
between ``(r, c)`` and ``(r, c + 1)``; ``v_walls[r, c]`` blocks the edge between
``(r, c)`` and ``(r + 1, c)``. Walls block both directions, and a blocked move
(or one off the grid) leaves the agent where it is.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .mdp import Environment

ACTIONS = ("up", "down", "left", "right", "stay")
_MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1), "stay": (0, 0)}


@dataclass(frozen=True, eq=False)
class Maze:
    n: int
    h_walls: np.ndarray
    v_walls: np.ndarray
    gamma: float = 0.8

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid size must be positive")
        h = np.asarray(self.h_walls, dtype=bool).reshape(self.n, max(self.n - 1, 0))
        v = np.asarray(self.v_walls, dtype=bool).reshape(max(self.n - 1, 0), self.n)
        h.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "h_walls", h)
        object.__setattr__(self, "v_walls", v)

    @classmethod
    def open(cls, n: int, gamma: float = 0.8) -> "Maze":
        return cls(n, np.zeros((n, n - 1), bool), np.zeros((n - 1, n), bool), gamma)

    @property
    def num_states(self) -> int:
        return self.n * self.n

    def blocked(self, r: int, c: int, dr: int, dc: int) -> bool:
        r2, c2 = r + dr, c + dc
        if not (0 <= r2 < self.n and 0 <= c2 < self.n):
            return True
        if dr:
            return bool(self.v_walls[min(r, r2), c])
        if dc:
            return bool(self.h_walls[r, min(c, c2)])
        return False

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "gamma": self.gamma,
            "h_walls": self.h_walls.tolist(),
            "v_walls": self.v_walls.tolist(),
        }

    @classmethod
    def from_dict(cls, data) -> "Maze":
        n = int(data["n"])
        return cls(n, np.array(data["h_walls"], bool).reshape(n, n - 1), np.array(data["v_walls"], bool).reshape(n - 1, n), float(data["gamma"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Maze":
        return cls.from_dict(json.loads(text))

    def ascii(self) -> str:
        n = self.n
        lines = ["+" + "---+" * n]
        for r in range(n):
            row = "|"
            for c in range(n):
                row += "   " + ("|" if c == n - 1 or self.h_walls[r, c] else " ")
            lines.append(row)
            floor = "+"
            for c in range(n):
                floor += ("---" if r == n - 1 or self.v_walls[r, c] else "   ") + "+"
            lines.append(floor)
        return "\n".join(lines)


def compile_maze(maze: Maze) -> Environment:
    n = maze.n
    d = n * n
    P = np.zeros((len(ACTIONS), d, d))
    for a, name in enumerate(ACTIONS):
        dr, dc = _MOVES[name]
        for r in range(n):
            for c in range(n):
                s = r * n + c
                t = s if maze.blocked(r, c, dr, dc) else (r + dr) * n + (c + dc)
                P[a, s, t] = 1.0
    return Environment(P, maze.gamma, ACTIONS)


@dataclass(frozen=True)
class MazeDistribution:
    """``uniform``: each wall i.i.d. with probability ``p``.

    ``varied``: draw a density per row and per column uniformly on [0, 1]; walls
    inside row ``r`` appear with row ``r``'s density, walls inside column ``c``
    with column ``c``'s density.
    """

    kind: str = "uniform"
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in ("uniform", "varied"):
            raise ValueError(f"unknown maze distribution {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("wall probability must lie in [0, 1]")

    def sample(self, n: int, gamma: float, rng: np.random.Generator) -> Maze:
        if self.kind == "uniform":
            h = rng.random((n, n - 1)) < self.p
            v = rng.random((n - 1, n)) < self.p
        else:
            d_row = rng.random(n)
            d_col = rng.random(n)
            h = rng.random((n, n - 1)) < d_row[:, None]
            v = rng.random((n - 1, n)) < d_col[None, :]
        return Maze(n, h, v, gamma)


def sample_maze(dist: MazeDistribution, n: int, gamma: float, seed) -> Maze:
    return dist.sample(n, gamma, np.random.default_rng(seed))
