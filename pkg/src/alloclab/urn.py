"""Adaptive urn designs: composition, updates, and design-matrix spectra.

An urn holds a (fractional) number of balls per treatment type.  Each
subject is assigned by drawing a ball with probability proportional to
the composition, and the composition is then updated from the observed
response.  The three updates here differ only in what gets added back:

* randomized play-the-winner  - reward the winner or its opponent,
* the K-arm generalization    - split the reward over the other arms
  equally after a failure,
* estimate-adjusted           - split the reward over the other arms
  proportionally to their current success estimates.

Limit behaviour is read off the expected per-draw addition matrix H
(``H[k, j]`` = expected balls of type j added after drawing type k): the
allocation converges to the left eigenvector of H at eigenvalue 1, and
fluctuations are normal iff every other eigenvalue has real part < 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .core import BernoulliArms, ParamEstimate

__all__ = [
    "UrnState",
    "draw_arm",
    "rpw_update",
    "wei_update",
    "seu_update",
    "DesignMatrix",
    "wei_design_matrix",
    "seu_design_matrix",
    "Regime",
    "SpectralInfo",
    "spectral",
]

MAX_MATRIX_ARMS = 8


class Regime(Enum):
    """Whether the usual sqrt(n) central limit theorem applies."""

    NORMAL = "normal"
    DEGENERATE_OR_UNKNOWN = "degenerate_or_unknown"


@dataclass(frozen=True)
class UrnState:
    """Current ball counts by treatment type; fractional counts allowed."""

    Y: np.ndarray

    def __init__(self, Y: Sequence[float]):
        arr = np.asarray(Y, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("urn needs a count per arm, at least two arms")
        if np.any(arr < 0.0):
            raise ValueError("ball counts must be nonnegative")
        if arr.sum() <= 0.0:
            raise ValueError("extinct urn: no balls to draw")
        arr.setflags(write=False)
        object.__setattr__(self, "Y", arr)

    @property
    def K(self) -> int:
        return int(self.Y.size)

    @property
    def total(self) -> float:
        # left-to-right accumulation; the compiled engine sums the same way
        t = 0.0
        for k in range(self.Y.size):
            t += float(self.Y[k])
        return t

    @classmethod
    def uniform(cls, K: int, balls_per_arm: float = 1.0) -> "UrnState":
        return cls([balls_per_arm] * K)


def draw_arm(urn: UrnState, rng) -> int:
    """Sample an arm proportionally to ball counts, one uniform."""
    total = urn.total
    r = rng.random() * total
    acc = 0.0
    for k in range(urn.K):
        acc += float(urn.Y[k])
        if r < acc:
            return k
    return urn.K - 1


def rpw_update(urn: UrnState, arm: int, success: bool) -> UrnState:
    """Two-arm randomized play-the-winner: one ball to the drawn arm on
    success, one ball to the other arm on failure."""
    if urn.K != 2:
        raise ValueError("randomized play-the-winner is a two-arm design")
    if arm not in (0, 1):
        raise IndexError("arm index out of range")
    Y = urn.Y.copy()
    Y[arm if success else 1 - arm] += 1.0
    return UrnState(Y)


def wei_update(urn: UrnState, arm: int, success: bool) -> UrnState:
    """K-arm urn: success adds one ball to the drawn arm, failure splits
    one ball equally over the K-1 other arms."""
    if not 0 <= arm < urn.K:
        raise IndexError("arm index out of range")
    Y = urn.Y.copy()
    if success:
        Y[arm] += 1.0
    else:
        share = 1.0 / (urn.K - 1)
        for j in range(urn.K):
            if j != arm:
                Y[j] += share
    return UrnState(Y)


def seu_update(urn: UrnState, arm: int, success: bool, est: ParamEstimate) -> UrnState:
    """Estimate-adjusted urn: failure splits the ball over the other arms
    proportionally to their estimated success probabilities.

    Starved arms therefore keep receiving balls as long as they look
    promising, not merely because they exist.  Estimates must be strictly
    positive for the split to be defined.
    """
    if not 0 <= arm < urn.K:
        raise IndexError("arm index out of range")
    if est.p_hat.size != urn.K:
        raise ValueError("estimate arity does not match the urn")
    Y = urn.Y.copy()
    if success:
        Y[arm] += 1.0
        return UrnState(Y)
    denom = 0.0
    for j in range(urn.K):
        if j != arm:
            denom += float(est.p_hat[j])
    if denom <= 0.0:
        raise ValueError("estimate-adjusted split undefined: competing estimates sum to zero")
    for j in range(urn.K):
        if j != arm:
            Y[j] += float(est.p_hat[j]) / denom
    return UrnState(Y)


@dataclass(frozen=True)
class DesignMatrix:
    """Expected per-draw addition matrix H with unit row sums."""

    H: np.ndarray

    def __init__(self, H):
        arr = np.asarray(H, dtype=np.float64).copy()
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("design matrix must be square")
        if arr.shape[0] > MAX_MATRIX_ARMS:
            raise ValueError(f"matrix forms support at most {MAX_MATRIX_ARMS} arms")
        if np.any(arr < -1e-12):
            raise ValueError("design matrix entries must be nonnegative")
        if np.max(np.abs(arr.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("design matrix rows must sum to 1")
        arr.setflags(write=False)
        object.__setattr__(self, "H", arr)

    @property
    def K(self) -> int:
        return int(self.H.shape[0])


def wei_design_matrix(arms: BernoulliArms) -> DesignMatrix:
    if arms.K > MAX_MATRIX_ARMS:
        raise ValueError(f"matrix forms support at most {MAX_MATRIX_ARMS} arms")
    K = arms.K
    H = np.empty((K, K))
    for k in range(K):
        pk = float(arms.p[k])
        H[k, :] = (1.0 - pk) / (K - 1)
        H[k, k] = pk
    return DesignMatrix(H)


def seu_design_matrix(arms: BernoulliArms) -> DesignMatrix:
    """Expected additions when failures are split by true success rates."""
    if arms.K > MAX_MATRIX_ARMS:
        raise ValueError(f"matrix forms support at most {MAX_MATRIX_ARMS} arms")
    K = arms.K
    p = arms.p
    H = np.empty((K, K))
    for k in range(K):
        others = float(p.sum() - p[k])
        for j in range(K):
            if j == k:
                H[k, j] = float(p[k])
            else:
                H[k, j] = (1.0 - float(p[k])) * float(p[j]) / others
    return DesignMatrix(H)


@dataclass(frozen=True)
class SpectralInfo:
    """Principal left eigenvector and the subdominant real-part bound."""

    v: np.ndarray
    lam: float
    regime: Regime

    def __post_init__(self):
        arr = np.asarray(self.v, dtype=np.float64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "v", arr)


def spectral(dm: DesignMatrix) -> SpectralInfo:
    """Limit allocation v (vH = v, sum 1) and lam = max Re of the rest.

    The sqrt(n) normal regime requires lam < 1/2; at or above that
    threshold the urn composition itself keeps fluctuating on a scale
    that dominates the sampling noise.
    """
    H = dm.H
    K = dm.K
    if K == 2:
        # closed form: off-diagonal rates give the stationary split
        h12, h21 = H[0, 1], H[1, 0]
        if h12 + h21 <= 0.0:
            raise ValueError("reducible design matrix: no unique limit allocation")
        v = np.array([h21, h12]) / (h12 + h21)
        lam = H[0, 0] + H[1, 1] - 1.0
    else:
        eigvals, eigvecs = np.linalg.eig(H.T)
        order = np.argsort(np.abs(eigvals - 1.0))
        top = order[0]
        if abs(eigvals[top] - 1.0) > 1e-8:
            raise ValueError("design matrix has no eigenvalue 1")
        if np.sort(np.abs(eigvals))[-2] > 1.0 - 1e-10:
            raise ValueError("reducible design matrix: no unique limit allocation")
        vec = np.real(eigvecs[:, top])
        vec = vec / vec.sum()
        if np.any(vec < -1e-10):
            raise ValueError("principal eigenvector is not a probability vector")
        v = np.clip(vec, 0.0, None)
        v = v / v.sum()
        lam = float(max(np.real(eigvals[i]) for i in order[1:]))
    regime = Regime.NORMAL if lam < 0.5 else Regime.DEGENERATE_OR_UNKNOWN
    return SpectralInfo(v=v, lam=float(lam), regime=regime)
