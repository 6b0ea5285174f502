"""Reward vectors up to behavioral equivalence.

Two rewards are behaviorally equivalent when they induce the same optimal
policies in every environment, which happens exactly when one is a positive
rescaling plus a constant shift of the other. Each class has a canonical
member with minimum 0 and maximum 1; constant rewards map to the zero vector.
"""

from __future__ import annotations

import numpy as np

from .mdp import Environment

CONSTANT_SPAN = 1e-12
DISTINGUISHER_GAMMA = 0.5
_LEVEL_TOL = 1e-9


class NoDistinguisherError(ValueError):
    """The two canonical rewards are equal, so no environment separates them."""


def _vector(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or not np.all(np.isfinite(r)):
        raise ValueError("reward must be a finite 1-d vector")
    return r


def _same_shape(r1, r2):
    r1, r2 = _vector(r1), _vector(r2)
    if r1.shape != r2.shape:
        raise ValueError(f"dimension mismatch: {r1.size} vs {r2.size}")
    return r1, r2


def canonicalize(r) -> np.ndarray:
    r = _vector(r)
    lo, hi = r.min(), r.max()
    if hi - lo < CONSTANT_SPAN:
        return np.zeros_like(r)
    return (r - lo) / (hi - lo)


def is_constant(r) -> bool:
    r = _vector(r)
    return bool(r.max() - r.min() < CONSTANT_SPAN)


def identification_error(true_r, estimate) -> float:
    """Sup-norm distance between canonical forms."""
    r1, r2 = _same_shape(true_r, estimate)
    return float(np.max(np.abs(canonicalize(r1) - canonicalize(r2)), initial=0.0))


def behaviorally_equivalent(r1, r2, tol: float = 1e-9) -> bool:
    return identification_error(r1, r2) <= tol


def _go_to(d: int, target: int) -> np.ndarray:
    P = np.zeros((d, d))
    P[:, target] = 1.0
    return P


def distinguishing_environment(c1, c2) -> Environment:
    """Two-action environment whose optimal behavior differs under ``c1`` and ``c2``.

    Both arguments are canonical rewards. The construction tries, in order:
    a state that is minimal under one reward but not the other, then the same
    for maximal states, and finally a state whose intermediate value differs,
    where a gamble between a maximal and a minimal state (at the midpoint
    probability) is pitted against moving to that state for sure.

    Every action sends every state to the same distribution, so the agent's
    choice compares the rewards of the destinations directly.
    """
    c1, c2 = _same_shape(c1, c2)
    if np.max(np.abs(c1 - c2)) <= _LEVEL_TOL:
        raise NoDistinguisherError("canonical rewards are identical")
    d = c1.size
    zero1, zero2 = not c1.any(), not c2.any()
    if zero1 or zero2:
        c = c2 if zero1 else c1
        P = np.stack([_go_to(d, int(np.argmax(c))), _go_to(d, int(np.argmin(c)))])
        return Environment(P, DISTINGUISHER_GAMMA, ("a", "a_prime"))

    for level in (0.0, 1.0):
        at1 = np.abs(c1 - level) <= _LEVEL_TOL
        at2 = np.abs(c2 - level) <= _LEVEL_TOL
        if np.array_equal(at1, at2):
            continue
        # s0 sits at the level under one reward only; s0' sits there under the other.
        if np.any(at1 & ~at2):
            s0, s0p = int(np.argmax(at1 & ~at2)), int(np.argmax(at2))
        else:
            s0, s0p = int(np.argmax(at2 & ~at1)), int(np.argmax(at1))
        P = np.stack([_go_to(d, s0), _go_to(d, s0p)])
        return Environment(P, DISTINGUISHER_GAMMA, ("a", "a_prime"))

    s = int(np.argmax(np.abs(c1 - c2)))
    s_low = int(np.argmax(np.abs(c1) <= _LEVEL_TOL))
    s_high = int(np.argmax(np.abs(c1 - 1.0) <= _LEVEL_TOL))
    p = 0.5 * (c1[s] + c2[s])
    gamble = np.zeros((d, d))
    gamble[:, s_high] = p
    gamble[:, s_low] = 1.0 - p
    P = np.stack([_go_to(d, s), gamble])
    return Environment(P, DISTINGUISHER_GAMMA, ("a", "a_p"))
