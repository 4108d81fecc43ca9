"""Biased-coin designs that steer the allocation toward an explicit target.

The doubly adaptive coin compares the current proportions x = N/n with
the estimated target y = rho(p_hat) and biases the next assignment via

    g_k(x, y) = y_k (y_k/x_k)^gamma / sum_j y_j (y_j/x_j)^gamma.

gamma = 0 ignores x (sample the estimated target directly); larger gamma
corrects deviations harder and drives the allocation variance down toward
the information bound at the price of less randomness per step.

The fully randomized coin replaces g by a discrete three-branch rule,
g(x, y) = alpha*y if x > y, y if x = y, 1 - alpha*(1-y) if x < y, for
two arms: every assignment stays properly random (probabilities bounded
away from 0 and 1) yet the allocation tracks the estimated target so
tightly that the only sqrt(n)-scale noise left is estimation error; the
scaled variance attains the information bound.  At a constant target of
1/2 this is the classical biased coin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DEFAULT_SCHEME, EstimatorScheme, TrialState, estimate
from .targets import TargetAllocation, grad_rho, information_bound, rho

__all__ = [
    "RHO_CLIP",
    "TIE_TOL",
    "DBCDConfig",
    "RBCDConfig",
    "g_alloc",
    "clamp_target",
    "dbcd_probabilities",
    "dbcd_next",
    "rbcd_probability",
    "rbcd_next",
    "dbcd_variance",
]

RHO_CLIP = 1e-6
TIE_TOL = 1e-12


@dataclass(frozen=True)
class DBCDConfig:
    """Doubly adaptive coin: correction exponent plus burn-in depth."""

    gamma: float = 2.0
    burn_in: int = 2
    scheme: EstimatorScheme = field(default_factory=lambda: DEFAULT_SCHEME)

    def __post_init__(self):
        if self.gamma < 0.0 or not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite and nonnegative")
        if self.burn_in < 1:
            raise ValueError("burn-in must assign each arm at least once")


@dataclass(frozen=True)
class RBCDConfig:
    """Fully randomized coin with bias parameter alpha in (0, 1).

    Smaller alpha corrects harder: an over-represented arm 0 is assigned
    with probability alpha * rho_hat instead of rho_hat.
    """

    alpha: float = 2.0 / 3.0
    scheme: EstimatorScheme = field(default_factory=lambda: DEFAULT_SCHEME)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly in (0, 1)")


def g_alloc(x: Sequence[float], y: Sequence[float], gamma: float) -> np.ndarray:
    """Allocation probabilities from current proportions x and target y."""
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("x and y must be equal-length vectors of at least two arms")
    for v in ys:
        if v <= 0.0:
            raise ValueError("target proportions must be strictly positive")
    if gamma > 0.0:
        for v in xs:
            if v <= 0.0:
                raise ValueError("current proportions must be strictly positive when gamma > 0")
    w = []
    for xk, yk in zip(xs, ys):
        if gamma == 0.0:
            w.append(yk)
        else:
            w.append(yk * (yk / xk) ** gamma)
    total = 0.0
    for v in w:
        total += v
    return np.array([v / total for v in w])


def clamp_target(values: Sequence[float]) -> np.ndarray:
    """Pin estimated targets away from the simplex boundary."""
    return np.array([min(max(float(v), RHO_CLIP), 1.0 - RHO_CLIP) for v in values])


def _estimated_target(state: TrialState, target: TargetAllocation, scheme: EstimatorScheme):
    # boundary estimates (possible under add-one weighting) would blow up
    # reciprocal target weights, so pin them inside the unit interval first
    p_hat = clamp_target(estimate(state, scheme).p_hat)
    return clamp_target(rho(target, [float(v) for v in p_hat]))


def dbcd_probabilities(
    state: TrialState, target: TargetAllocation, cfg: DBCDConfig
) -> np.ndarray:
    """Next-assignment probabilities after burn-in."""
    K = state.K
    if state.n < cfg.burn_in * K:
        raise ValueError("burn-in incomplete: every arm needs its initial assignments")
    y = _estimated_target(state, target, cfg.scheme)
    x = [float(c) / float(state.n) for c in state.N]
    return g_alloc(x, y, cfg.gamma)


def dbcd_next(state: TrialState, target: TargetAllocation, cfg: DBCDConfig, rng) -> int:
    """One assignment; burn-in rotates through the arms deterministically.

    During burn-in no randomness is consumed; afterwards exactly one
    uniform decides the arm via a cumulative walk over g.
    """
    K = state.K
    if state.n < cfg.burn_in * K:
        return state.n % K
    g = dbcd_probabilities(state, target, cfg)
    r = rng.random()
    acc = 0.0
    for k in range(K):
        acc += float(g[k])
        if r < acc:
            return k
    return K - 1


def rbcd_probability(state: TrialState, target: TargetAllocation, cfg: RBCDConfig) -> float:
    """Probability of assigning arm 0 under the fully randomized coin.

    Compares the current arm-0 proportion x against the estimated target
    rho_hat: over-represented gives alpha * rho_hat, under-represented
    1 - alpha * (1 - rho_hat), exact balance rho_hat itself.  The tie is
    decided on the products N_0 vs n * rho_hat at a 1e-12 tolerance so the
    measure-zero equality branch is still deterministic.
    """
    if state.K != 2:
        raise ValueError("the fully randomized coin is a two-arm design")
    if state.n < 2:
        raise ValueError("burn-in incomplete: every arm needs one assignment")
    y = _estimated_target(state, target, cfg.scheme)
    r0 = float(y[0])
    diff = float(state.N[0]) - state.n * r0
    if abs(diff) <= TIE_TOL:
        return r0
    if diff > 0.0:
        return cfg.alpha * r0
    return 1.0 - cfg.alpha * (1.0 - r0)


def rbcd_next(state: TrialState, target: TargetAllocation, cfg: RBCDConfig, rng) -> int:
    """One assignment; burn-in gives each arm one subject in index order."""
    if state.K != 2:
        raise ValueError("the fully randomized coin is a two-arm design")
    if state.n < 2:
        return state.n
    prob0 = rbcd_probability(state, target, cfg)
    return 0 if rng.random() < prob0 else 1


def dbcd_variance(target: TargetAllocation, p, gamma: float) -> np.ndarray:
    """Asymptotic covariance of the scaled allocation proportions.

    Equals Sigma_rho + (diag(rho) - rho rho^T + Sigma_rho) / (1 + 2 gamma)
    with Sigma_rho the information bound; decreasing in gamma, with limit
    Sigma_rho as gamma -> infinity and the sampling-noise-dominated value
    at gamma = 0.
    """
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    bound = information_bound(target, p)
    r = rho(target, p)
    multinomial = np.diag(r) - np.outer(r, r)
    return bound + (multinomial + bound) / (1.0 + 2.0 * gamma)
