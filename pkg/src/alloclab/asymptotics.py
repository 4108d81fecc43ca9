"""Closed-form limit allocations and fluctuation variances.

Each ``var_*`` function returns an :class:`AsymptoticSummary` describing
the design's limiting allocation v and, when the design is in the normal
regime, the covariance of sqrt(n) * (N/n - v).  ``lower_bound`` gives the
information floor shared by every design with the same limit allocation,
and ``table2_variability`` compares the matched-target covariances of the
three modern families (estimate-adjusted urn, efficient generalized
drop-the-loser, doubly adaptive coin).

Scalar summaries for two arms always refer to arm 0: sigma2 is the [0, 0]
entry of the covariance (the two proportions are perfectly anticorrelated
so one number carries everything).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import BernoulliArms
from .dbcd import dbcd_variance
from .markov import ChainCoefficients, mcad_stationary, mcad_variance
from .targets import TargetAllocation, information_bound, rho
from .urn import MAX_MATRIX_ARMS, Regime, seu_design_matrix, spectral, wei_design_matrix

__all__ = [
    "Regime",
    "AsymptoticSummary",
    "LowerBound",
    "var_pw",
    "var_mcad",
    "var_rpw",
    "var_wei",
    "var_dl",
    "var_dbcd",
    "var_rbcd",
    "lower_bound",
    "lower_bound_closed_form",
    "table2_variability",
    "worked_examples",
    "WorkedExample",
]


@dataclass(frozen=True)
class AsymptoticSummary:
    """Limit allocation plus (if normal) scaled-fluctuation covariance."""

    v: np.ndarray
    sigma2: Optional[float]
    cov: Optional[np.ndarray]
    regime: Regime

    def __post_init__(self):
        arr = np.asarray(self.v, dtype=np.float64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "v", arr)
        if self.cov is not None:
            c = np.asarray(self.cov, dtype=np.float64).copy()
            c.setflags(write=False)
            object.__setattr__(self, "cov", c)


@dataclass(frozen=True)
class LowerBound:
    """Information floor for designs sharing a limit allocation."""

    target: TargetAllocation
    Sigma: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.Sigma, dtype=np.float64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "Sigma", arr)

    @property
    def sigma2(self) -> float:
        """Scalar bound for two arms: the [0, 0] entry."""
        return float(self.Sigma[0, 0])


def _two_arm(arms: BernoulliArms, what: str):
    if arms.K != 2:
        raise ValueError(f"{what} is a two-arm design")
    return float(arms.p[0]), float(arms.p[1])


def var_pw(arms: BernoulliArms) -> AsymptoticSummary:
    """Deterministic play-the-winner: v_1 = q2/(q1+q2),
    sigma2 = q1 q2 (p1+p2) / (q1+q2)^3."""
    p1, p2 = _two_arm(arms, "play-the-winner")
    q1, q2 = 1.0 - p1, 1.0 - p2
    s = q1 + q2
    v1 = q2 / s
    sigma2 = q1 * q2 * (p1 + p2) / s**3
    cov = np.array([[sigma2, -sigma2], [-sigma2, sigma2]])
    return AsymptoticSummary(
        v=np.array([v1, 1.0 - v1]), sigma2=sigma2, cov=cov, regime=Regime.NORMAL
    )


def var_mcad(coeffs: ChainCoefficients) -> AsymptoticSummary:
    """Markov-chain stay/switch rule in terms of its averaged coefficients."""
    mu = mcad_stationary(coeffs)
    sigma2 = mcad_variance(coeffs)
    cov = np.array([[sigma2, -sigma2], [-sigma2, sigma2]])
    return AsymptoticSummary(
        v=np.array([mu, 1.0 - mu]), sigma2=sigma2, cov=cov, regime=Regime.NORMAL
    )


def var_rpw(arms: BernoulliArms) -> AsymptoticSummary:
    """Randomized play-the-winner urn.

    The limit allocation is the urn target q2/(q1+q2) regardless, but the
    sqrt(n) normal limit exists only for q1 + q2 > 1/2; at or below that
    threshold the urn's own composition fluctuates on a larger scale and
    no finite sigma2 is reported.
    """
    p1, p2 = _two_arm(arms, "randomized play-the-winner")
    q1, q2 = 1.0 - p1, 1.0 - p2
    s = q1 + q2
    v = np.array([q2 / s, q1 / s])
    if s > 0.5:
        sigma2 = q1 * q2 * (5.0 - 2.0 * s) / ((2.0 * s - 1.0) * s**2)
        cov = np.array([[sigma2, -sigma2], [-sigma2, sigma2]])
        return AsymptoticSummary(v=v, sigma2=sigma2, cov=cov, regime=Regime.NORMAL)
    return AsymptoticSummary(v=v, sigma2=None, cov=None, regime=Regime.DEGENERATE_OR_UNKNOWN)


def var_wei(arms: BernoulliArms) -> AsymptoticSummary:
    """K-arm addition urn: limit allocation and regime from the spectrum.

    For two arms this is the randomized play-the-winner urn and the full
    variance is reported; for K > 2 only the allocation and the regime
    classification are available in closed form here.
    """
    if arms.K == 2:
        return var_rpw(arms)
    info = spectral(wei_design_matrix(arms))
    return AsymptoticSummary(v=info.v, sigma2=None, cov=None, regime=info.regime)


def var_seu(arms: BernoulliArms) -> AsymptoticSummary:
    """Estimate-adjusted urn: allocation and regime from the mean design
    matrix at the true parameters."""
    info = spectral(seu_design_matrix(arms))
    return AsymptoticSummary(v=info.v, sigma2=None, cov=None, regime=info.regime)


def var_dl(arms: BernoulliArms) -> AsymptoticSummary:
    """Drop-the-loser urn: urn-target allocation with covariance
    (I - 1 v)^T diag(v_k p_k / q_k) (I - 1 v)."""
    K = arms.K
    if K > MAX_MATRIX_ARMS:
        raise ValueError(f"matrix forms support at most {MAX_MATRIX_ARMS} arms")
    target = TargetAllocation("urn")
    v = rho(target, arms)
    D = np.zeros((K, K))
    for k in range(K):
        pk = float(arms.p[k])
        D[k, k] = float(v[k]) * pk / (1.0 - pk)
    A = np.eye(K) - np.outer(np.ones(K), v)
    cov = A.T @ D @ A
    sigma2 = float(cov[0, 0]) if K == 2 else None
    return AsymptoticSummary(v=np.asarray(v), sigma2=sigma2, cov=cov, regime=Regime.NORMAL)


def var_dbcd(target: TargetAllocation, arms: BernoulliArms, gamma: float) -> AsymptoticSummary:
    """Doubly adaptive coin at correction exponent gamma."""
    cov = dbcd_variance(target, arms, gamma)
    v = rho(target, arms)
    sigma2 = float(cov[0, 0]) if arms.K == 2 else None
    return AsymptoticSummary(v=np.asarray(v), sigma2=sigma2, cov=cov, regime=Regime.NORMAL)


def var_rbcd(target: TargetAllocation, arms: BernoulliArms) -> AsymptoticSummary:
    """Fully randomized coin: attains the information floor exactly."""
    if arms.K != 2:
        raise ValueError("the fully randomized coin is a two-arm design")
    bound = information_bound(target, arms)
    v = rho(target, arms)
    sigma2 = float(bound[0, 0])
    return AsymptoticSummary(v=np.asarray(v), sigma2=sigma2, cov=bound, regime=Regime.NORMAL)


def lower_bound(target: TargetAllocation, arms: BernoulliArms) -> LowerBound:
    """Information floor over all designs with this limit allocation."""
    if arms.K > MAX_MATRIX_ARMS:
        raise ValueError(f"matrix forms support at most {MAX_MATRIX_ARMS} arms")
    return LowerBound(target=target, Sigma=information_bound(target, arms))


def lower_bound_closed_form(kind: str, arms: BernoulliArms) -> float:
    """Two-arm scalar floors written out explicitly, for cross-checking
    the matrix route."""
    p1, p2 = _two_arm(arms, "the scalar lower bound")
    q1, q2 = 1.0 - p1, 1.0 - p2
    kind = kind.lower()
    if kind == "urn":
        s = q1 + q2
        return q1 * q2 * (p1 + p2) / s**3
    if kind == "neyman":
        t = math.sqrt(p1 * q1) + math.sqrt(p2 * q2)
        return (
            p2 * q2 * (1.0 - 2.0 * p1) ** 2 / math.sqrt(p1 * q1)
            + p1 * q1 * (1.0 - 2.0 * p2) ** 2 / math.sqrt(p2 * q2)
        ) / (4.0 * t**3)
    if kind == "rsihr":
        u = math.sqrt(p1) + math.sqrt(p2)
        return (p2 * q1 / math.sqrt(p1) + p1 * q2 / math.sqrt(p2)) / (4.0 * u**3)
    raise ValueError(f"unknown target kind {kind!r}")


def table2_variability(
    model: str, target: TargetAllocation, arms: BernoulliArms, gamma: Optional[float] = None
) -> np.ndarray:
    """Asymptotic covariance of the named family when tuned to ``target``.

    ``seu`` pays sampling noise plus six times the floor, ``gdl`` (the
    efficient generalized drop-the-loser) twice the floor, and ``dbcd``
    interpolates from sampling-dominated down to the floor as gamma grows.
    """
    if arms.K > MAX_MATRIX_ARMS:
        raise ValueError(f"matrix forms support at most {MAX_MATRIX_ARMS} arms")
    model = model.lower()
    r = rho(target, arms)
    multinomial = np.diag(r) - np.outer(r, r)
    bound = information_bound(target, arms)
    if model == "seu":
        return multinomial + 6.0 * bound
    if model == "gdl":
        return 2.0 * bound
    if model == "dbcd":
        if gamma is None:
            raise ValueError("dbcd needs a gamma")
        return dbcd_variance(target, arms, gamma)
    raise ValueError(f"unknown model {model!r}; expected seu, gdl, or dbcd")


@dataclass(frozen=True)
class WorkedExample:
    """One target's doubly adaptive coin variance, two routes."""

    target: str
    gamma: float
    closed_form: float
    general: float

    @property
    def abs_diff(self) -> float:
        return abs(self.closed_form - self.general)


def _dbcd_scalar_closed_form(kind: str, p1: float, p2: float, gamma: float) -> float:
    """Hand-expanded two-arm doubly adaptive coin variances."""
    q1, q2 = 1.0 - p1, 1.0 - p2
    c = 1.0 + 2.0 * gamma
    if kind == "urn":
        s = q1 + q2
        return q1 * q2 * (p1 + p2) / s**3 + 2.0 * q1 * q2 / (c * s**3)
    if kind == "neyman":
        t = math.sqrt(p1 * q1) + math.sqrt(p2 * q2)
        lead = math.sqrt(p1 * q1 * p2 * q2) / (c * t * t)
        corr = (1.0 + gamma) / (2.0 * c * t**3) * (
            p2 * q2 * (q1 - p1) ** 2 / math.sqrt(p1 * q1)
            + p1 * q1 * (q2 - p2) ** 2 / math.sqrt(p2 * q2)
        )
        return lead + corr
    if kind == "rsihr":
        u = math.sqrt(p1) + math.sqrt(p2)
        lead = math.sqrt(p1 * p2) / (c * u * u)
        corr = (1.0 + gamma) / (2.0 * c * u**3) * (
            p2 * q1 / math.sqrt(p1) + p1 * q2 / math.sqrt(p2)
        )
        return lead + corr
    raise ValueError(f"unknown target kind {kind!r}")


def worked_examples(arms: BernoulliArms, gammas: Sequence[float] = (0.0, 2.0)) -> list:
    """Cross-check the closed-form doubly adaptive coin variances against
    the general matrix formula for every target kind."""
    p1, p2 = _two_arm(arms, "the worked examples")
    rows = []
    for kind in ("urn", "neyman", "rsihr"):
        target = TargetAllocation(kind)
        for gamma in gammas:
            closed = _dbcd_scalar_closed_form(kind, p1, p2, float(gamma))
            general = float(dbcd_variance(target, arms, float(gamma))[0, 0])
            rows.append(
                WorkedExample(target=kind, gamma=float(gamma), closed_form=closed, general=general)
            )
    return rows
