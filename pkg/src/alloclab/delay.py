"""Delayed-response machinery: entry process, response clocks, bookkeeping.

Subjects arrive at the events of a Poisson process (rate ``entry_rate``)
and the response of a subject on arm k becomes available an independent
Exp(``response_rates[k]``) time after assignment.  Designs only see
responses that are due by the current entry epoch, so every adaptive rule
runs on a lagged information set.  The probability that an arm-k response
is still pending after l further arrivals is

    mu_k(l) = (entry_rate / (entry_rate + response_rates[k])) ** l,

which decays geometrically: delays thin the usable history but do not
change limit allocations, and for the designs in this package the scaled
fluctuations keep their no-delay covariance.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "DelayModel",
    "mu_pending",
    "PendingQueue",
    "DelayStats",
    "audit_event_log",
    "run_delayed_trial",
]


@dataclass(frozen=True)
class DelayModel:
    """Entry rate plus per-arm exponential response rates (events per unit
    time; larger response rates mean faster answers)."""

    entry_rate: float
    response_rates: np.ndarray

    def __init__(self, entry_rate: float, response_rates: Sequence[float]):
        rates = np.asarray(response_rates, dtype=np.float64).copy()
        if not entry_rate > 0.0:
            raise ValueError("entry rate must be positive")
        if rates.ndim != 1 or rates.size < 2:
            raise ValueError("need a response rate per arm, at least two arms")
        if not np.all(rates > 0.0):
            raise ValueError("response rates must be positive")
        rates.setflags(write=False)
        object.__setattr__(self, "entry_rate", float(entry_rate))
        object.__setattr__(self, "response_rates", rates)

    @property
    def K(self) -> int:
        return int(self.response_rates.size)

    @classmethod
    def shared(cls, entry_rate: float, response_rate: float, K: int) -> "DelayModel":
        return cls(entry_rate, [response_rate] * K)


def mu_pending(model: DelayModel, arm: int, lag: int) -> float:
    """Probability an arm's response is still pending after ``lag`` more
    arrivals; lag 0 means "just assigned" and gives 1."""
    if not 0 <= arm < model.K:
        raise IndexError("arm index out of range")
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    ratio = model.entry_rate / (model.entry_rate + float(model.response_rates[arm]))
    return ratio**lag


class PendingQueue:
    """Min-heap of (due_time, subject, arm, outcome) response events.

    Events pop in (due_time, subject) order, each exactly once; ties on
    due_time (measure zero under the continuous clocks) break by subject
    index so replay order is total.
    """

    def __init__(self):
        self._heap: List[Tuple[float, int, int, bool]] = []
        self._seen: set = set()

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, due: float, subject: int, arm: int, outcome: bool):
        if subject in self._seen:
            raise ValueError(f"subject {subject} already has a scheduled response")
        self._seen.add(subject)
        heapq.heappush(self._heap, (float(due), int(subject), int(arm), bool(outcome)))

    def pop_due(self, now: float) -> List[Tuple[float, int, int, bool]]:
        """Remove and return every event with due_time <= now, in order."""
        out = []
        while self._heap and self._heap[0][0] <= now:
            out.append(heapq.heappop(self._heap))
        return out


@dataclass(frozen=True)
class DelayStats:
    """Observed-information bookkeeping of one delayed trial.

    ``n_obs``/``s_obs`` count responses that were due by the final entry
    epoch; ``mean_pending``/``max_pending`` summarize the queue length
    seen by the n allocation decisions.
    """

    n_obs: np.ndarray
    s_obs: np.ndarray
    mean_pending: float
    max_pending: int

    def __post_init__(self):
        for name in ("n_obs", "s_obs"):
            arr = np.asarray(getattr(self, name), dtype=np.int64).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def terminal_pending(self, N: np.ndarray) -> int:
        return int(np.sum(np.asarray(N) - self.n_obs))


def audit_event_log(log: Sequence[tuple]) -> None:
    """Validate causality and exactly-once semantics of a trial event log.

    Expected event kinds, in simulation order: ``("entry", t, m)``,
    ``("apply", due, m)`` for each response revealed at that epoch,
    ``("assign", t, m, arm)``, ``("schedule", due, m)``.  Raises
    AssertionError on any violation: an applied response that was not due,
    a due response left unapplied at the decision that follows, double
    application, or out-of-order timestamps.
    """
    now = -1.0
    scheduled = {}
    applied = set()
    entered = set()
    for ev in log:
        kind = ev[0]
        if kind == "entry":
            _, t, m = ev
            assert t >= now, "entry times must be nondecreasing"
            now = t
            assert m not in entered, "duplicate entry"
            entered.add(m)
        elif kind == "apply":
            _, due, m = ev
            assert m in scheduled, "applied a response that was never scheduled"
            assert m not in applied, "response applied twice"
            assert due <= now + 1e-12, "applied a response before it was due"
            applied.add(m)
        elif kind == "assign":
            _, t, m, _arm = ev
            assert t == now and m in entered, "assignment must follow its entry"
            for subj, due in scheduled.items():
                if due <= now:
                    assert subj in applied, f"response of subject {subj} was due but unapplied"
        elif kind == "schedule":
            _, due, m = ev
            assert due >= now, "response cannot precede its assignment"
            assert m not in scheduled, "response scheduled twice"
            scheduled[m] = due
        else:
            raise AssertionError(f"unknown event kind {kind!r}")


def run_delayed_trial(spec, arms, model: DelayModel, n: int, stream, *, backend=None, audit: bool = False):
    """Simulate one delayed trial; see :func:`alloclab.engine.run_trial`.

    The design consumes the stream's main generator and the entry/response
    clocks consume an independent child, so a design's assignment draws
    line up one-for-one with its no-delay counterpart on the same stream.
    """
    from . import engine  # local import: engine depends on this module

    return engine.run_trial(
        spec, arms, n, stream, delay=model, backend=backend, audit=audit
    )
