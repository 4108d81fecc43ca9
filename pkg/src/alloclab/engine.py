"""Trial simulation front end: design specs, backends, result types.

``run_trial`` simulates one complete trial of n subjects under a
:class:`DesignSpec`, with or without response delays.  Two backends
produce bit-identical results from the same :class:`~alloclab.core.
RandomStream`: compiled kernels (built from ``_kernels.pyx``) and the
pure-Python reference in ``_engine_py``.  The compiled backend is
selected automatically when present; set ``ALLOCLAB_PURE_PYTHON=1`` to
force the fallback, or pass ``backend=`` explicitly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from . import _engine_py
from .core import DEFAULT_SCHEME, BernoulliArms, RandomStream, TrialState
from .dbcd import DBCDConfig, RBCDConfig
from .delay import DelayModel, DelayStats
from .droploser import MAX_IMMIGRATION_DRAWS
from .markov import MCADParams
from .targets import TargetAllocation

try:
    from . import _kernels
except ImportError:  # pure-Python install
    _kernels = None

__all__ = [
    "DesignSpec",
    "TrialResult",
    "have_compiled_kernels",
    "active_backend",
    "run_trial",
]

DESIGN_KINDS = ("pw", "cr", "mcad", "rpw", "wei", "seu", "dl", "dbcd", "rbcd")

_TARGET_IDS = {"urn": 0, "neyman": 1, "rsihr": 2}


def have_compiled_kernels() -> bool:
    return _kernels is not None


def active_backend() -> str:
    """Backend used when none is requested explicitly."""
    if _kernels is None:
        return "python"
    if os.environ.get("ALLOCLAB_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    return "compiled"


@dataclass(frozen=True)
class DesignSpec:
    """A fully parameterized randomization rule.

    Build with the class methods; ``kind`` is one of ``pw``, ``cr``,
    ``mcad``, ``rpw``, ``wei``, ``seu``, ``dl``, ``dbcd``, ``rbcd``.
    Fields not used by the kind stay None.  Specs are engine-agnostic:
    urn compositions and ball counts are defaults that ``validated``
    resolves against the arm count.
    """

    kind: str
    mcad: Optional[MCADParams] = None
    y0: Optional[Tuple[float, ...]] = None
    z0: Optional[Tuple[int, ...]] = None
    target: Optional[TargetAllocation] = None
    dbcd: Optional[DBCDConfig] = None
    rbcd: Optional[RBCDConfig] = None

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}; expected one of {DESIGN_KINDS}")

    # -- constructors -------------------------------------------------
    @classmethod
    def play_the_winner(cls) -> "DesignSpec":
        return cls(kind="pw")

    @classmethod
    def complete_randomization(cls) -> "DesignSpec":
        return cls(kind="cr")

    @classmethod
    def markov_chain(cls, params: MCADParams) -> "DesignSpec":
        return cls(kind="mcad", mcad=params)

    @classmethod
    def randomized_play_the_winner(cls, y0=None) -> "DesignSpec":
        return cls(kind="rpw", y0=None if y0 is None else tuple(float(v) for v in y0))

    @classmethod
    def urn(cls, y0=None) -> "DesignSpec":
        return cls(kind="wei", y0=None if y0 is None else tuple(float(v) for v in y0))

    @classmethod
    def estimate_adjusted_urn(cls, y0=None) -> "DesignSpec":
        return cls(kind="seu", y0=None if y0 is None else tuple(float(v) for v in y0))

    @classmethod
    def drop_the_loser(cls, z0=None) -> "DesignSpec":
        return cls(kind="dl", z0=None if z0 is None else tuple(int(v) for v in z0))

    @classmethod
    def doubly_adaptive(
        cls, target: TargetAllocation, gamma: float = 2.0, burn_in: int = 2, scheme=DEFAULT_SCHEME
    ) -> "DesignSpec":
        return cls(
            kind="dbcd",
            target=target,
            dbcd=DBCDConfig(gamma=gamma, burn_in=burn_in, scheme=scheme),
        )

    @classmethod
    def randomized_coin(
        cls, target: TargetAllocation, alpha: float = 2.0 / 3.0, scheme=DEFAULT_SCHEME
    ) -> "DesignSpec":
        return cls(kind="rbcd", target=target, rbcd=RBCDConfig(alpha=alpha, scheme=scheme))

    # -- validation ----------------------------------------------------
    def validated(self, K: int) -> "DesignSpec":
        """Resolve defaults against the arm count; raise on mismatch."""
        kind = self.kind
        if kind in ("pw", "cr", "mcad", "rpw", "rbcd") and K != 2:
            raise ValueError(f"design {kind!r} needs exactly two arms")
        out = self
        if kind == "pw":
            out = replace(out, mcad=MCADParams.play_the_winner())
        elif kind == "cr":
            out = replace(out, mcad=MCADParams.complete_randomization())
        elif kind == "mcad":
            if out.mcad is None:
                raise ValueError("mcad design needs stay probabilities")
        elif kind in ("rpw", "wei", "seu"):
            y0 = out.y0 if out.y0 is not None else tuple([1.0] * K)
            if len(y0) != K:
                raise ValueError("urn composition length must match the arm count")
            if min(y0) < 0.0 or sum(y0) <= 0.0:
                raise ValueError("urn composition must be nonnegative with positive total")
            out = replace(out, y0=y0)
        elif kind == "dl":
            z0 = out.z0 if out.z0 is not None else tuple([1] * (K + 1))
            if len(z0) != K + 1:
                raise ValueError("ball counts must cover the immigration type plus each arm")
            if z0[0] < 1 or min(z0) < 0:
                raise ValueError("need nonnegative counts and at least one immigration ball")
            out = replace(out, z0=z0)
        elif kind == "dbcd":
            if out.target is None or out.dbcd is None:
                raise ValueError("doubly adaptive design needs a target and a configuration")
            if out.target.arity is not None and out.target.arity != K:
                raise ValueError(f"target {out.target.kind!r} supports exactly {out.target.arity} arms")
        elif kind == "rbcd":
            if out.target is None or out.rbcd is None:
                raise ValueError("randomized coin needs a target and a configuration")
        return out

    def _family(self) -> Tuple[str, tuple]:
        """(family, params) in the engines' wire format."""
        kind = self.kind
        if kind in ("pw", "cr", "mcad"):
            m = self.mcad
            return "mcad", (m.alpha_s, m.alpha_f, m.beta_s, m.beta_f)
        if kind in ("rpw", "wei", "seu"):
            return "urn", (self.y0, kind == "seu")
        if kind == "dl":
            return "dl", (self.z0, MAX_IMMIGRATION_DRAWS)
        if kind == "dbcd":
            c = self.dbcd
            return "dbcd", (c.gamma, c.burn_in, c.scheme.a, c.scheme.b, self.target.kind)
        c = self.rbcd
        return "rbcd", (c.alpha, c.scheme.a, c.scheme.b, self.target.kind)


@dataclass(frozen=True)
class TrialResult:
    """One simulated trial: per-subject records plus terminal counts.

    ``observed``/``stats`` are populated only for delayed runs, where a
    response may still be pending when enrollment stops; undelayed runs
    observe everything (``stats`` is None and ``observed`` all ones).
    """

    spec: DesignSpec
    n: int
    assignments: np.ndarray
    outcomes: np.ndarray
    N: np.ndarray
    S: np.ndarray
    observed: np.ndarray
    stats: Optional[DelayStats] = None
    event_log: Optional[list] = None

    @property
    def proportions(self) -> np.ndarray:
        return self.N / self.n

    def to_state(self) -> TrialState:
        """Rebuild the trial state; pending responses stay pending."""
        history = tuple(
            (int(a), bool(o) if obs else None)
            for a, o, obs in zip(self.assignments, self.outcomes, self.observed)
        )
        S = self.stats.s_obs if self.stats is not None else self.S
        return TrialState(n=self.n, N=self.N, S=S, history=history)


def _compiled_ok(backend: Optional[str], audit: bool) -> bool:
    if backend == "python":
        return False
    if backend == "compiled":
        if _kernels is None:
            raise RuntimeError("compiled kernels are not available in this install")
        if audit:
            raise ValueError("event-log audits run on the python backend")
        return True
    if backend is not None:
        raise ValueError(f"unknown backend {backend!r}; expected 'compiled' or 'python'")
    return active_backend() == "compiled" and not audit


def run_trial(
    spec: DesignSpec,
    arms: BernoulliArms,
    n: int,
    stream: RandomStream,
    *,
    delay: Optional[DelayModel] = None,
    backend: Optional[str] = None,
    audit: bool = False,
) -> TrialResult:
    """Simulate one trial of ``n`` subjects.

    The design stream is ``stream.generator()``; delayed runs draw their
    entry/response clocks from ``stream.child(1)``.  ``audit=True``
    (python backend only) attaches a causality event log.
    """
    if n < 1:
        raise ValueError("need at least one subject")
    if audit and delay is None:
        raise ValueError("event-log audits apply to delayed runs")
    spec = spec.validated(arms.K)
    family, params = spec._family()
    p = tuple(float(v) for v in arms.p)
    use_compiled = _compiled_ok(backend, audit)

    if delay is None:
        gen = stream.generator()
        if use_compiled:
            a, o, N, S = _kernels.run_trial(
                gen.bit_generator, family, params, p, n
            )
        else:
            a, o, N, S = _engine_py.run_trial(family, params, p, n, gen)
        return TrialResult(
            spec=spec,
            n=n,
            assignments=a,
            outcomes=o,
            N=N,
            S=S,
            observed=np.ones(n, dtype=np.uint8),
        )

    if delay.K != arms.K:
        raise ValueError("delay model arity does not match the arm count")
    rates = tuple(float(v) for v in delay.response_rates)
    gen = stream.generator()
    gen_delay = stream.child(1)
    if use_compiled:
        a, o, N, S, observed, n_obs, s_obs, mean_pending, max_pending = _kernels.run_delayed_trial(
            gen.bit_generator,
            gen_delay.bit_generator,
            family,
            params,
            p,
            n,
            delay.entry_rate,
            rates,
        )
        log = None
    else:
        (
            a,
            o,
            N,
            S,
            observed,
            n_obs,
            s_obs,
            mean_pending,
            max_pending,
            log,
        ) = _engine_py.run_delayed_trial(
            family, params, p, n, gen, delay.entry_rate, rates, gen_delay, audit
        )
    stats = DelayStats(
        n_obs=n_obs, s_obs=s_obs, mean_pending=float(mean_pending), max_pending=int(max_pending)
    )
    return TrialResult(
        spec=spec,
        n=n,
        assignments=a,
        outcomes=o,
        N=N,
        S=S,
        observed=observed,
        stats=stats,
        event_log=log,
    )
