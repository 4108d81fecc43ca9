"""Replicated simulation studies with analytic cross-checks.

A study runs R independent trials of a design on streams
(master_seed, 0), ..., (master_seed, R-1), keeps the per-replicate
sufficient statistics (terminal counts, observed counts under delay),
and summarizes them against the matching closed-form limits: mean
proportions vs v, the sample covariance of sqrt(n) * N/n vs the design's
asymptotic covariance, Wald-test rejection rates, and expected treatment
failures.  Because replicate statistics are integers kept in stream
order, merging two half-studies reproduces the full-study report
byte-for-byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from statistics import NormalDist
from typing import Optional, Tuple

import numpy as np

from .asymptotics import (
    AsymptoticSummary,
    LowerBound,
    lower_bound,
    var_dbcd,
    var_dl,
    var_mcad,
    var_pw,
    var_rbcd,
    var_rpw,
    var_seu,
    var_wei,
)
from .core import BernoulliArms, RandomStream
from .delay import DelayModel
from .engine import DesignSpec, run_trial
from .markov import compose_coefficients
from .targets import TargetAllocation

__all__ = [
    "SimConfig",
    "ReplicateSet",
    "StudyReport",
    "run_replicates",
    "merge",
    "summarize",
    "run_study",
    "wald_power",
    "expected_failures",
    "analytic_reference",
]


@dataclass(frozen=True)
class SimConfig:
    """One study: a design, arms, horizon, and replication plan."""

    spec: DesignSpec
    arms: BernoulliArms
    n: int
    replicates: int
    master_seed: int
    delay: Optional[DelayModel] = None
    test_level: float = 0.05
    stream_start: int = 0
    name: str = ""

    def __post_init__(self):
        if self.n < 10:
            raise ValueError("horizon n must be at least 10")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if not 0.0 < self.test_level < 1.0:
            raise ValueError("test level must lie strictly in (0, 1)")
        if self.stream_start < 0:
            raise ValueError("stream start must be nonnegative")
        self.spec.validated(self.arms.K)  # surface bad design parameters early


@dataclass(frozen=True)
class ReplicateSet:
    """Per-replicate sufficient statistics, rows in stream order."""

    cfg: SimConfig
    N: np.ndarray
    S: np.ndarray
    n_obs: Optional[np.ndarray] = None
    s_obs: Optional[np.ndarray] = None
    mean_pending: Optional[np.ndarray] = None
    max_pending: Optional[np.ndarray] = None

    @property
    def R(self) -> int:
        return int(self.N.shape[0])


def run_replicates(cfg: SimConfig) -> ReplicateSet:
    """Run R independent trials on consecutive streams."""
    R, K = cfg.replicates, cfg.arms.K
    N = np.empty((R, K), dtype=np.int64)
    S = np.empty((R, K), dtype=np.int64)
    delayed = cfg.delay is not None
    n_obs = np.empty((R, K), dtype=np.int64) if delayed else None
    s_obs = np.empty((R, K), dtype=np.int64) if delayed else None
    mean_pending = np.empty(R, dtype=np.float64) if delayed else None
    max_pending = np.empty(R, dtype=np.int64) if delayed else None
    for r in range(R):
        stream = RandomStream(cfg.master_seed, cfg.stream_start + r)
        res = run_trial(cfg.spec, cfg.arms, cfg.n, stream, delay=cfg.delay)
        N[r] = res.N
        S[r] = res.S
        if delayed:
            n_obs[r] = res.stats.n_obs
            s_obs[r] = res.stats.s_obs
            mean_pending[r] = res.stats.mean_pending
            max_pending[r] = res.stats.max_pending
    return ReplicateSet(
        cfg=cfg,
        N=N,
        S=S,
        n_obs=n_obs,
        s_obs=s_obs,
        mean_pending=mean_pending,
        max_pending=max_pending,
    )


def merge(a: ReplicateSet, b: ReplicateSet) -> ReplicateSet:
    """Concatenate two half-studies covering consecutive stream ranges."""
    ca, cb = a.cfg, b.cfg
    same = (
        ca.spec == cb.spec
        and np.array_equal(ca.arms.p, cb.arms.p)
        and ca.n == cb.n
        and ca.master_seed == cb.master_seed
        and ca.test_level == cb.test_level
        and (ca.delay is None) == (cb.delay is None)
    )
    if not same:
        raise ValueError("cannot merge studies with different configurations")
    if cb.stream_start != ca.stream_start + ca.replicates:
        raise ValueError("stream ranges must be consecutive and disjoint")

    def cat(x, y):
        if x is None:
            return None
        return np.concatenate([x, y], axis=0)

    cfg = replace(ca, replicates=ca.replicates + cb.replicates)
    return ReplicateSet(
        cfg=cfg,
        N=cat(a.N, b.N),
        S=cat(a.S, b.S),
        n_obs=cat(a.n_obs, b.n_obs),
        s_obs=cat(a.s_obs, b.s_obs),
        mean_pending=cat(a.mean_pending, b.mean_pending),
        max_pending=cat(a.max_pending, b.max_pending),
    )


def wald_power(N: np.ndarray, S: np.ndarray, level: float) -> Tuple[float, float]:
    """Two-sided Wald rejection rate of H0: p1 = p2, with its Monte Carlo SE.

    The variance uses the continuity-corrected (S+0.5)/(N+1) estimates so
    degenerate replicates (an arm all successes, all failures, or never
    assigned) still yield a finite statistic; empty arms keep a unit
    pseudo-count in the variance divisor.  The numerator uses raw S/N
    whenever N > 0.
    """
    N = np.asarray(N, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    if N.ndim != 2 or N.shape[1] != 2:
        raise ValueError("the Wald test compares exactly two arms")
    if not 0.0 < level < 1.0:
        raise ValueError("test level must lie strictly in (0, 1)")
    corrected = (S + 0.5) / (N + 1.0)
    divisor = np.maximum(N, 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        raw = np.where(N > 0.0, S / divisor, corrected)
    var = np.sum(corrected * (1.0 - corrected) / divisor, axis=1)
    z = (raw[:, 0] - raw[:, 1]) / np.sqrt(var)
    crit = NormalDist().inv_cdf(1.0 - level / 2.0)
    reject = np.abs(z) > crit
    rate = float(reject.mean())
    R = N.shape[0]
    se = math.sqrt(rate * (1.0 - rate) / R)
    return rate, se


def expected_failures(N: np.ndarray, S: np.ndarray) -> Tuple[float, float]:
    """Mean treatment failures per trial across replicates, with SE."""
    fails = np.asarray(N).sum(axis=1) - np.asarray(S).sum(axis=1)
    mean = float(fails.mean())
    R = fails.shape[0]
    se = float(fails.std(ddof=1) / math.sqrt(R)) if R > 1 else float("nan")
    return mean, se


def analytic_reference(
    spec: DesignSpec, arms: BernoulliArms
) -> Tuple[Optional[AsymptoticSummary], Optional[LowerBound]]:
    """Closed-form limits for the design, when available.

    The lower bound is attached for every design whose limit allocation
    is one of the named targets: the reward urns and drop-the-loser share
    the urn target, the coins carry their own.  General stay/switch
    chains and complete randomization have no target-form allocation.
    """
    spec = spec.validated(arms.K)
    kind = spec.kind
    summary: Optional[AsymptoticSummary] = None
    bound: Optional[LowerBound] = None
    if kind in ("pw", "cr", "mcad"):
        summary = var_mcad(compose_coefficients(arms, spec.mcad))
        if kind == "pw":
            bound = lower_bound(TargetAllocation("urn"), arms)
    elif kind == "rpw":
        summary = var_rpw(arms)
        bound = lower_bound(TargetAllocation("urn"), arms)
    elif kind == "wei":
        summary = var_wei(arms)
        bound = lower_bound(TargetAllocation("urn"), arms)
    elif kind == "seu":
        summary = var_seu(arms)
        bound = lower_bound(TargetAllocation("urn"), arms)
    elif kind == "dl":
        summary = var_dl(arms)
        bound = lower_bound(TargetAllocation("urn"), arms)
    elif kind == "dbcd":
        summary = var_dbcd(spec.target, arms, spec.dbcd.gamma)
        bound = lower_bound(spec.target, arms)
    elif kind == "rbcd":
        summary = var_rbcd(spec.target, arms)
        bound = lower_bound(spec.target, arms)
    return summary, bound


@dataclass(frozen=True)
class StudyReport:
    """Aggregated study results next to their analytic references."""

    cfg: SimConfig
    mean_proportions: np.ndarray
    se_proportions: np.ndarray
    scaled_cov: np.ndarray
    scaled_variance: float
    se_scaled_variance: float
    analytic: Optional[AsymptoticSummary]
    bound: Optional[LowerBound]
    power: Optional[float]
    se_power: Optional[float]
    failures: float
    se_failures: float
    mean_terminal_pending: Optional[float] = None
    mean_queue_pending: Optional[float] = None
    max_pending: Optional[int] = None
    mean_success_gap_scaled: Optional[float] = None

    @property
    def variance_ratio(self) -> Optional[float]:
        if self.analytic is None or self.analytic.sigma2 is None:
            return None
        return self.scaled_variance / self.analytic.sigma2

    def to_json_dict(self) -> dict:
        cfg = self.cfg
        spec = cfg.spec.validated(cfg.arms.K)
        out = {
            "name": cfg.name,
            "design": spec.kind,
            "target": spec.target.kind if spec.target is not None else None,
            "arms": [float(v) for v in cfg.arms.p],
            "n": cfg.n,
            "replicates": cfg.replicates,
            "seed": cfg.master_seed,
            "delayed": cfg.delay is not None,
            "mean_proportions": [float(v) for v in self.mean_proportions],
            "se_proportions": [float(v) for v in self.se_proportions],
            "scaled_covariance": [[float(v) for v in row] for row in self.scaled_cov],
            "scaled_variance": self.scaled_variance,
            "se_scaled_variance": self.se_scaled_variance,
            "power": self.power,
            "se_power": self.se_power,
            "failures": self.failures,
            "se_failures": self.se_failures,
        }
        if self.analytic is not None:
            out["analytic"] = {
                "v": [float(v) for v in self.analytic.v],
                "sigma2": self.analytic.sigma2,
                "regime": self.analytic.regime.value,
            }
            out["variance_ratio"] = self.variance_ratio
        else:
            out["analytic"] = None
            out["variance_ratio"] = None
        if self.bound is not None:
            out["lower_bound"] = {
                "target": self.bound.target.kind,
                "sigma2": self.bound.sigma2 if cfg.arms.K == 2 else None,
                "Sigma": [[float(v) for v in row] for row in self.bound.Sigma],
            }
        else:
            out["lower_bound"] = None
        if self.mean_terminal_pending is not None:
            out["delay"] = {
                "mean_terminal_pending": self.mean_terminal_pending,
                "mean_queue_pending": self.mean_queue_pending,
                "max_pending": self.max_pending,
                "mean_success_gap_scaled": self.mean_success_gap_scaled,
            }
        return out

    def csv_row(self) -> dict:
        """Flat, stable columns; one row per scenario."""
        cfg = self.cfg
        spec = cfg.spec.validated(cfg.arms.K)
        analytic_v = self.analytic.v[0] if self.analytic is not None else None
        analytic_s2 = self.analytic.sigma2 if self.analytic is not None else None
        regime = self.analytic.regime.value if self.analytic is not None else None
        return {
            "name": cfg.name,
            "design": spec.kind,
            "target": spec.target.kind if spec.target is not None else "",
            "n": cfg.n,
            "replicates": cfg.replicates,
            "seed": cfg.master_seed,
            "delayed": int(cfg.delay is not None),
            "v1_hat": float(self.mean_proportions[0]),
            "se_v1": float(self.se_proportions[0]),
            "v1_analytic": "" if analytic_v is None else float(analytic_v),
            "sigma2_hat": self.scaled_variance,
            "se_sigma2": self.se_scaled_variance,
            "sigma2_analytic": "" if analytic_s2 is None else float(analytic_s2),
            "variance_ratio": "" if self.variance_ratio is None else self.variance_ratio,
            "sigma2_lower_bound": "" if self.bound is None or cfg.arms.K != 2 else self.bound.sigma2,
            "regime": regime or "",
            "power": "" if self.power is None else self.power,
            "se_power": "" if self.se_power is None else self.se_power,
            "failures": self.failures,
            "se_failures": self.se_failures,
        }


CSV_COLUMNS = (
    "name",
    "design",
    "target",
    "n",
    "replicates",
    "seed",
    "delayed",
    "v1_hat",
    "se_v1",
    "v1_analytic",
    "sigma2_hat",
    "se_sigma2",
    "sigma2_analytic",
    "variance_ratio",
    "sigma2_lower_bound",
    "regime",
    "power",
    "se_power",
    "failures",
    "se_failures",
)


def summarize(reps: ReplicateSet) -> StudyReport:
    """Aggregate a replicate set; deterministic in replicate order."""
    cfg = reps.cfg
    n, R, K = cfg.n, reps.R, cfg.arms.K
    props = reps.N / float(n)
    mean_props = props.mean(axis=0)
    se_props = (
        props.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.full(K, np.nan)
    )
    scaled = math.sqrt(n) * props
    if R > 1:
        cov = np.cov(scaled, rowvar=False, ddof=1)
        cov = np.atleast_2d(cov)
    else:
        cov = np.full((K, K), np.nan)
    sigma2 = float(cov[0, 0])
    se_sigma2 = sigma2 * math.sqrt(2.0 / (R - 1)) if R > 1 else float("nan")
    analytic, bound = analytic_reference(cfg.spec, cfg.arms)
    if K == 2:
        power, se_power = wald_power(reps.N, reps.S, cfg.test_level)
    else:
        power, se_power = None, None
    fails, se_fails = expected_failures(reps.N, reps.S)
    extra = {}
    if reps.n_obs is not None:
        terminal_pending = (reps.N - reps.n_obs).sum(axis=1)
        gap = np.abs(reps.S - reps.s_obs).sum(axis=1) / math.sqrt(n)
        extra = {
            "mean_terminal_pending": float(terminal_pending.mean()),
            "mean_queue_pending": float(reps.mean_pending.mean()),
            "max_pending": int(reps.max_pending.max()),
            "mean_success_gap_scaled": float(gap.mean()),
        }
    return StudyReport(
        cfg=cfg,
        mean_proportions=mean_props,
        se_proportions=se_props,
        scaled_cov=cov,
        scaled_variance=sigma2,
        se_scaled_variance=se_sigma2,
        analytic=analytic,
        bound=bound,
        power=power,
        se_power=se_power,
        failures=fails,
        se_failures=se_fails,
        **extra,
    )


def run_study(cfg: SimConfig) -> StudyReport:
    return summarize(run_replicates(cfg))
