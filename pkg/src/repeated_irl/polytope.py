"""The polytope of rewards consistent with a set of experiments, and sampling from it.

A :class:`ConsistentSet` is a box intersected with half-spaces ``w . R >= 0``.
Every half-space passes through the origin, so the set is a cone clipped by
the box and always contains the zero vector and every constant reward.

Uniform samples come from a hit-and-run chain. When observed behavior contains
exact ties the half-spaces can pin the set to a lower-dimensional slice (for
instance ``R(s) >= R(s')`` from one experiment and ``R(s') >= R(s)`` from
another); the chain then runs inside the affine hull of the set, so "volume"
means volume relative to that hull.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .mdp import Environment, PartialPolicy, ng_russell_constraints

MEMBERSHIP_TOL = 1e-9
ZERO_ROW_TOL = 1e-12
DEFAULT_BURN_IN = 1000
DEFAULT_THINNING = 10

_SLACK_CAP = 1.0
_STRICT_TOL = 1e-9
_DIRECTION_BATCH = 256


class EmptyInteriorError(RuntimeError):
    """No strictly feasible starting point could be found for the sampler."""


@dataclass(frozen=True)
class Box:
    low: float
    high: float

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError(f"degenerate box [{self.low}, {self.high}]")

    @property
    def center(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def width(self) -> float:
        return self.high - self.low


@dataclass(frozen=True, eq=False)
class ConsistentSet:
    """Box-bounded rewards satisfying ``rows @ R >= 0``.

    ``tags[i]`` names the experiment that contributed ``rows[i]``.
    """

    dim: int
    box: Box
    rows: np.ndarray = field(default=None)
    tags: tuple = ()

    def __post_init__(self):
        rows = np.zeros((0, self.dim)) if self.rows is None else np.asarray(self.rows, dtype=float)
        rows = rows.reshape(-1, self.dim)
        if len(self.tags) != rows.shape[0]:
            raise ValueError("need exactly one tag per constraint row")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "tags", tuple(self.tags))

    @property
    def num_constraints(self) -> int:
        return self.rows.shape[0]

    def contains(self, R, tol: float = MEMBERSHIP_TOL):
        """Membership of one reward ``(d,)`` or of each row of a batch ``(n, d)``."""
        R = np.asarray(R, dtype=float)
        X = np.atleast_2d(R)
        inside = np.all((X >= self.box.low - tol) & (X <= self.box.high + tol), axis=1)
        if self.num_constraints:
            inside &= np.all(X @ self.rows.T >= -tol, axis=1)
        return bool(inside[0]) if R.ndim == 1 else inside

    def with_constraints(self, rows, tag=None) -> "ConsistentSet":
        """Intersect with ``rows @ R >= 0``; numerically zero rows are dropped."""
        rows = np.asarray(rows, dtype=float).reshape(-1, self.dim)
        rows = rows[np.max(np.abs(rows), axis=1, initial=0.0) >= ZERO_ROW_TOL]
        return ConsistentSet(
            self.dim,
            self.box,
            np.vstack([self.rows, rows]),
            self.tags + (tag,) * rows.shape[0],
        )


def empty_set(d: int, bounds: Box | tuple[float, float]) -> ConsistentSet:
    """The unconstrained box, before any experiment."""
    if d < 1:
        raise ValueError("dimension must be positive")
    box = bounds if isinstance(bounds, Box) else Box(*bounds)
    return ConsistentSet(d, box)


def add_experiment(k: ConsistentSet, env: Environment, obs, tag=None) -> ConsistentSet:
    """Intersect ``k`` with the rewards under which ``obs`` is optimal in ``env``.

    ``obs`` is a full policy, or a :class:`PartialPolicy` completed with the
    lowest action index on unobserved states.
    """
    if env.num_states != k.dim:
        raise ValueError("environment and reward set disagree on the number of states")
    if isinstance(obs, PartialPolicy):
        obs = obs.complete(env.num_states)
    return k.with_constraints(ng_russell_constraints(env, obs), tag)


@dataclass(frozen=True, eq=False)
class SampleCloud:
    samples: np.ndarray
    seed: int
    burn_in: int
    thinning: int

    def __len__(self) -> int:
        return self.samples.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"r{i}" for i in range(self.samples.shape[1])])
            writer.writerows(self.samples.tolist())

    @classmethod
    def from_csv(cls, path, seed: int = -1, burn_in: int = 0, thinning: int = 0) -> "SampleCloud":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data, seed, burn_in, thinning)


def _inequalities(k: ConsistentSet) -> tuple[np.ndarray, np.ndarray]:
    """All of ``k`` as ``G x <= h`` with unit-norm rows and duplicates removed."""
    d = k.dim
    W = k.rows / np.linalg.norm(k.rows, axis=1, keepdims=True)
    if W.shape[0]:
        _, first = np.unique(np.round(W, 12), axis=0, return_index=True)
        W = W[np.sort(first)]
    G = np.vstack([-W, np.eye(d), -np.eye(d)])
    h = np.concatenate([np.zeros(W.shape[0]), np.full(d, k.box.high), np.full(d, -k.box.low)])
    return G, h


def _relative_interior(G: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """A point of ``{G x <= h}`` strictly inside every constraint that is not an implicit equality.

    Repeatedly maximizes the total (capped) slack of the constraints not yet
    seen strict. Each solve either proves some new constraint can be strict or
    shows that the rest cannot; the average of the solutions is strict on every
    constraint that was strict somewhere. Returns that point and a mask of the
    implicit equalities.
    """
    m, d = G.shape
    strict = np.zeros(m, dtype=bool)
    points = []
    while True:
        open_rows = np.flatnonzero(~strict)
        if open_rows.size == 0:
            break
        k = open_rows.size
        # variables: x (d), s (k); maximize sum(s) s.t. G x + E s <= h, 0 <= s <= cap
        c = np.concatenate([np.zeros(d), -np.ones(k)])
        E = np.zeros((m, k))
        E[open_rows, np.arange(k)] = 1.0
        res = scipy.optimize.linprog(
            c,
            A_ub=np.hstack([G, E]),
            b_ub=h,
            bounds=[(None, None)] * d + [(0.0, _SLACK_CAP)] * k,
            method="highs",
        )
        if res.status != 0:
            raise EmptyInteriorError(f"feasibility program failed: {res.message}")
        x = res.x[:d]
        points.append(x)
        newly = (h - G @ x) > _STRICT_TOL
        if not np.any(newly & ~strict):
            break
        strict |= newly
    x0 = np.mean(points, axis=0)
    return x0, ~strict


def hit_and_run_sample(
    k: ConsistentSet,
    n: int,
    seed: int,
    burn_in: int = DEFAULT_BURN_IN,
    thinning: int = DEFAULT_THINNING,
) -> SampleCloud:
    """Approximately uniform samples from ``k`` by hit-and-run.

    From the current point the chain draws a direction uniformly from the unit
    sphere (of the set's affine hull), finds the chord through the point, and
    jumps to a uniform point on it. ``burn_in`` steps are discarded and every
    ``thinning``-th step is kept afterwards.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if thinning < 1 or burn_in < 0:
        raise ValueError("thinning must be >= 1 and burn_in >= 0")
    rng = np.random.default_rng(seed)
    G, h = _inequalities(k)
    d = k.dim
    if k.num_constraints == 0:
        x = np.full(d, k.box.center)
        basis = np.eye(d)
        free = np.ones(G.shape[0], dtype=bool)
    else:
        x, equal = _relative_interior(G, h)
        free = ~equal
        basis = scipy.linalg.null_space(G[equal], rcond=1e-9) if equal.any() else np.eye(d)
        if basis.shape[1] == 0:
            samples = np.repeat(x[None], n, axis=0)
            return SampleCloud(samples, seed, burn_in, thinning)
    Gf, hf = G[free], h[free]
    slack = hf - Gf @ x
    if np.any(slack <= 0):
        raise EmptyInteriorError("no strictly feasible starting point")

    total = burn_in + n * thinning
    samples = np.empty((n, d))
    kept = 0
    step = 0
    while step < total:
        batch = min(_DIRECTION_BATCH, total - step)
        U = rng.standard_normal((basis.shape[1], batch))
        U /= np.linalg.norm(U, axis=0, keepdims=True)
        D = basis @ U
        GD = Gf @ D
        T = rng.random(batch)
        for j in range(batch):
            g = GD[:, j]
            pos, neg = g > 0, g < 0
            t_hi = np.min(slack[pos] / g[pos]) if pos.any() else 0.0
            t_lo = np.max(slack[neg] / g[neg]) if neg.any() else 0.0
            t = t_lo + T[j] * (t_hi - t_lo)
            x = x + t * D[:, j]
            slack = slack - t * g
            step += 1
            if step > burn_in and (step - burn_in) % thinning == 0:
                samples[kept] = x
                kept += 1
        slack = hf - Gf @ x
    return SampleCloud(samples, seed, burn_in, thinning)


def violation_mask(samples: np.ndarray, rows: np.ndarray, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """True for each sample that breaks at least one of ``rows @ R >= 0``."""
    rows = np.asarray(rows, dtype=float)
    if rows.size == 0:
        return np.zeros(samples.shape[0], dtype=bool)
    return np.any(samples @ rows.T < -tol, axis=1)


def estimate_f(cloud: SampleCloud, candidate_constraints, tol: float = MEMBERSHIP_TOL) -> float:
    """Fraction of the cloud eliminated by the candidate constraints.

    With the cloud uniform on the current set this estimates the share of its
    volume the new experiment removes.
    """
    if len(cloud) == 0:
        raise ValueError("empty sample cloud")
    return float(violation_mask(cloud.samples, candidate_constraints, tol).mean())


def marginal_eliminated(
    samples: np.ndarray, base_rows: Sequence | np.ndarray, new_rows, tol: float = MEMBERSHIP_TOL
) -> int:
    """Count of samples inside ``base_rows`` that ``new_rows`` would remove."""
    inside = ~violation_mask(samples, np.asarray(base_rows, dtype=float).reshape(-1, samples.shape[1]), tol)
    return int(np.count_nonzero(inside & violation_mask(samples, new_rows, tol)))
