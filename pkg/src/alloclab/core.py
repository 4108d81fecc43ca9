"""Shared domain types for sequential allocation designs.

Arms are indexed ``0 .. K-1``.  An assignment is the index of the arm a
subject is randomized to (the equivalent one-hot vector is available via
:func:`one_hot`); an outcome is ``True`` for success.  :class:`TrialState`
accumulates per-arm counts plus the full per-subject history, including
subjects whose outcome has not been observed yet.  All state transitions
are functional: ``record``/``resolve_outcome`` return new states and never
mutate their argument.

Randomness is always explicit.  Design rules receive a generator (or a
:class:`RandomStream` describing how to build one) and no function in the
package touches global RNG state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

__all__ = [
    "BernoulliArms",
    "EstimatorScheme",
    "DEFAULT_SCHEME",
    "ADD_ONE_SCHEME",
    "ParamEstimate",
    "TrialState",
    "RandomStream",
    "one_hot",
    "record",
    "resolve_outcome",
    "estimate",
    "draw_bernoulli",
]


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a one-dimensional sequence")
    return arr


@dataclass(frozen=True)
class BernoulliArms:
    """Success probabilities of a K-arm trial with binary responses.

    Probabilities must be strictly inside (0, 1); boundary values break
    both the urn updates (extinction) and the variance formulas, so they
    are rejected up front.
    """

    p: np.ndarray

    def __init__(self, p: Sequence[float]):
        arr = _as_float_vector(p, "p")
        if arr.size < 2:
            raise ValueError("need at least two arms")
        if not np.all((arr > 0.0) & (arr < 1.0)):
            raise ValueError("success probabilities must lie strictly in (0, 1)")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    @property
    def K(self) -> int:
        return int(self.p.size)

    @property
    def q(self) -> np.ndarray:
        """Failure probabilities, 1 - p."""
        return 1.0 - self.p


@dataclass(frozen=True)
class EstimatorScheme:
    """Shrinkage scheme for success probabilities: p_hat = (S + a) / (N + b).

    With a > 0 and b >= 2a the estimate is strictly inside (0, 1) for every
    reachable state, including arms that have never been assigned.  The
    add-one scheme (a = b = 1) used by some urn updates can return exactly
    1.0 on an all-success arm; callers that need interior values must clamp.
    """

    a: float = 1.0
    b: float = 2.0

    def __post_init__(self):
        if self.a < 0.0 or self.b < 0.0:
            raise ValueError("shrinkage offsets must be nonnegative")


DEFAULT_SCHEME = EstimatorScheme(1.0, 2.0)
ADD_ONE_SCHEME = EstimatorScheme(1.0, 1.0)


@dataclass(frozen=True)
class ParamEstimate:
    """Per-arm success probability estimates plus the scheme that made them."""

    p_hat: np.ndarray
    scheme: EstimatorScheme

    def __post_init__(self):
        arr = _as_float_vector(self.p_hat, "p_hat")
        arr.setflags(write=False)
        object.__setattr__(self, "p_hat", arr)


def _frozen_counts(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a one-dimensional sequence")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TrialState:
    """Counts and history after n sequential assignments.

    ``history[m]`` is ``(arm, outcome)`` for subject m, with ``outcome``
    None while the response is still pending.  ``S`` counts observed
    successes only, so ``0 <= S_k <= N_k`` and ``sum(N) == n`` always hold.
    """

    n: int
    N: np.ndarray
    S: np.ndarray
    history: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "N", _frozen_counts(self.N, "N"))
        object.__setattr__(self, "S", _frozen_counts(self.S, "S"))
        if self.N.size != self.S.size:
            raise ValueError("N and S must have the same number of arms")
        if self.n != int(self.N.sum()):
            raise ValueError("n must equal the total assignment count")
        if len(self.history) != self.n:
            raise ValueError("history length must equal n")
        if np.any(self.N < 0) or np.any(self.S < 0) or np.any(self.S > self.N):
            raise ValueError("counts must satisfy 0 <= S_k <= N_k")

    @classmethod
    def empty(cls, K: int) -> "TrialState":
        if K < 2:
            raise ValueError("need at least two arms")
        zeros = np.zeros(K, dtype=np.int64)
        return cls(n=0, N=zeros, S=zeros.copy(), history=())

    @property
    def K(self) -> int:
        return int(self.N.size)

    @property
    def pending(self) -> tuple:
        """Indices of subjects whose outcome is still unobserved."""
        return tuple(m for m, (_, out) in enumerate(self.history) if out is None)

    @property
    def N_observed(self) -> np.ndarray:
        """Per-arm counts of subjects with an observed outcome."""
        obs = np.zeros(self.K, dtype=np.int64)
        for arm, out in self.history:
            if out is not None:
                obs[arm] += 1
        return obs


def one_hot(arm: int, K: int) -> np.ndarray:
    """Assignment vector: all zeros except a single 1 at ``arm``."""
    if not 0 <= arm < K:
        raise IndexError("arm index out of range")
    vec = np.zeros(K, dtype=np.int64)
    vec[arm] = 1
    return vec


def record(state: TrialState, arm: int, outcome: Optional[bool]) -> TrialState:
    """Append one subject; ``outcome=None`` leaves the response pending."""
    if not 0 <= arm < state.K:
        raise IndexError("arm index out of range")
    N = state.N.copy()
    S = state.S.copy()
    N[arm] += 1
    if outcome:
        S[arm] += 1
    return TrialState(
        n=state.n + 1,
        N=N,
        S=S,
        history=state.history + ((arm, None if outcome is None else bool(outcome)),),
    )


def resolve_outcome(state: TrialState, subject: int, outcome: bool) -> TrialState:
    """Attach the response of a previously pending subject."""
    if not 0 <= subject < state.n:
        raise IndexError("subject index out of range")
    arm, prior = state.history[subject]
    if prior is not None:
        raise ValueError(f"subject {subject} already has an outcome")
    S = state.S.copy()
    if outcome:
        S[arm] += 1
    history = list(state.history)
    history[subject] = (arm, bool(outcome))
    return TrialState(n=state.n, N=state.N, S=S, history=tuple(history))


def estimate(state: TrialState, scheme: EstimatorScheme = DEFAULT_SCHEME) -> ParamEstimate:
    """Shrunk success-probability estimates from observed responses.

    Pending subjects contribute to neither numerator nor denominator; the
    denominator uses the observed count so the estimate stays a proper
    fraction of resolved outcomes.
    """
    n_obs = state.N_observed.astype(np.float64)
    s_obs = state.S.astype(np.float64)
    num = s_obs + scheme.a
    den = n_obs + scheme.b
    with np.errstate(invalid="ignore", divide="ignore"):
        p_hat = np.where(den > 0.0, num / den, np.nan)
    return ParamEstimate(p_hat=p_hat, scheme=scheme)


def draw_bernoulli(arms: BernoulliArms, arm: int, rng) -> bool:
    """Draw one response, consuming exactly one uniform from ``rng``."""
    if not 0 <= arm < arms.K:
        raise IndexError("arm index out of range")
    return rng.random() < float(arms.p[arm])


@dataclass(frozen=True)
class RandomStream:
    """Addressable randomness: a pure function of (master_seed, stream_id).

    Streams are counter-based (Philox), so distinct stream ids give
    statistically independent sequences and replicate r of a study can be
    reproduced in isolation without fast-forwarding through r-1 others.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.master_seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream id must be nonnegative")

    def generator(self) -> Generator:
        return Generator(Philox(SeedSequence(self.master_seed, spawn_key=(self.stream_id,))))

    def child(self, index: int) -> Generator:
        """Independent side channel (entry/response clocks, etc.)."""
        if index < 0:
            raise ValueError("child index must be nonnegative")
        return Generator(
            Philox(SeedSequence(self.master_seed, spawn_key=(self.stream_id, index)))
        )
