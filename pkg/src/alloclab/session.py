"""Live allocation sessions: assignments by the engine, outcomes by hand.

A session runs one design over an indefinite stream of real subjects.
Enrollment consumes randomness from the session's stream exactly like a
simulated trial would; outcomes are supplied by the operator whenever
they arrive, so every design runs on its observed-information semantics
(urns update on observation, drop-the-loser sets drawn balls aside,
coin estimates use observed counts only).

Every mutation appends one line-delimited JSON event to the session's
log file; replaying the log through the same code path reproduces the
state exactly, which is how a restarted server restores its sessions.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path
from typing import Optional

from . import _engine_py
from .core import (
    ADD_ONE_SCHEME,
    DEFAULT_SCHEME,
    EstimatorScheme,
    RandomStream,
    TrialState,
    estimate,
    record,
    resolve_outcome,
)
from .dbcd import clamp_target
from .engine import DesignSpec
from .markov import MCADParams
from .targets import TargetAllocation, rho

__all__ = [
    "Session",
    "SessionStore",
    "spec_from_descriptor",
    "descriptor_from_spec",
]


def spec_from_descriptor(d: dict) -> DesignSpec:
    """Build a design from its wire-format JSON descriptor."""
    if not isinstance(d, dict):
        raise ValueError("design descriptor must be an object")
    kind = d.get("kind")
    if not isinstance(kind, str):
        raise ValueError("design descriptor needs a 'kind'")
    kind = kind.lower()
    scheme = None
    if "estimator" in d:
        est = d["estimator"]
        scheme = EstimatorScheme(float(est.get("a", 1.0)), float(est.get("b", 2.0)))
    target = None
    if d.get("target") is not None:
        target = TargetAllocation(str(d["target"]))
    if kind == "pw":
        return DesignSpec.play_the_winner()
    if kind == "cr":
        return DesignSpec.complete_randomization()
    if kind == "mcad":
        m = d.get("mcad")
        if not isinstance(m, dict):
            raise ValueError("mcad design needs stay probabilities under 'mcad'")
        return DesignSpec.markov_chain(
            MCADParams(
                float(m["alpha_s"]), float(m["alpha_f"]), float(m["beta_s"]), float(m["beta_f"])
            )
        )
    if kind == "rpw":
        return DesignSpec.randomized_play_the_winner(d.get("y0"))
    if kind == "wei":
        return DesignSpec.urn(d.get("y0"))
    if kind == "seu":
        return DesignSpec.estimate_adjusted_urn(d.get("y0"))
    if kind == "dl":
        return DesignSpec.drop_the_loser(d.get("z0"))
    if kind == "dbcd":
        if target is None:
            raise ValueError("dbcd design needs a 'target'")
        return DesignSpec.doubly_adaptive(
            target,
            gamma=float(d.get("gamma", 2.0)),
            burn_in=int(d.get("burn_in", 2)),
            scheme=scheme or DEFAULT_SCHEME,
        )
    if kind == "rbcd":
        if target is None:
            raise ValueError("rbcd design needs a 'target'")
        return DesignSpec.randomized_coin(
            target, alpha=float(d.get("alpha", 2.0 / 3.0)), scheme=scheme or DEFAULT_SCHEME
        )
    raise ValueError(f"unknown design kind {kind!r}")


def descriptor_from_spec(spec: DesignSpec) -> dict:
    """Wire-format echo of a validated design."""
    out: dict = {"kind": spec.kind}
    if spec.mcad is not None and spec.kind == "mcad":
        out["mcad"] = {
            "alpha_s": spec.mcad.alpha_s,
            "alpha_f": spec.mcad.alpha_f,
            "beta_s": spec.mcad.beta_s,
            "beta_f": spec.mcad.beta_f,
        }
    if spec.y0 is not None:
        out["y0"] = list(spec.y0)
    if spec.z0 is not None:
        out["z0"] = list(spec.z0)
    if spec.target is not None:
        out["target"] = spec.target.kind
    if spec.dbcd is not None:
        out["gamma"] = spec.dbcd.gamma
        out["burn_in"] = spec.dbcd.burn_in
        out["estimator"] = {"a": spec.dbcd.scheme.a, "b": spec.dbcd.scheme.b}
    if spec.rbcd is not None:
        out["alpha"] = spec.rbcd.alpha
        out["estimator"] = {"a": spec.rbcd.scheme.a, "b": spec.rbcd.scheme.b}
    return out


class Session:
    """One live trial; all mutations go through enroll/record_outcome."""

    def __init__(self, session_id: str, spec: DesignSpec, arms: int, seed: int, name: str = ""):
        if arms < 2:
            raise ValueError("need at least two arms")
        self.id = session_id
        self.name = name
        self.K = int(arms)
        self.seed = int(seed)
        self.spec = spec.validated(self.K)
        family, params = self.spec._family()
        self._design = _engine_py._Design(family, params, (0.5,) * self.K, self.K)
        if family == "dl":
            self._design.aside = True  # outcomes arrive later; set drawn balls aside
        self._rng = RandomStream(self.seed, 0).generator()
        self.state = TrialState.empty(self.K)
        self.lock = threading.Lock()

    # estimator used for the displayed p_hat
    def _scheme(self) -> EstimatorScheme:
        if self.spec.dbcd is not None:
            return self.spec.dbcd.scheme
        if self.spec.rbcd is not None:
            return self.spec.rbcd.scheme
        if self.spec.kind == "seu":
            return ADD_ONE_SCHEME
        return DEFAULT_SCHEME

    def _burn_in_total(self) -> Optional[int]:
        if self.spec.kind == "dbcd":
            return self.spec.dbcd.burn_in * self.K
        if self.spec.kind == "rbcd":
            return 2
        return None

    def enroll(self) -> tuple:
        m = self.state.n
        N = [int(v) for v in self.state.N]
        arm = self._design.decide(m, N, self._rng)
        self.state = record(self.state, arm, None)
        return m, arm

    def record_outcome(self, subject: int, success: bool):
        # raises IndexError for unknown subjects, ValueError for duplicates
        self.state = resolve_outcome(self.state, subject, bool(success))
        arm = self.state.history[subject][0]
        self._design.observe(arm, bool(success))

    def view(self) -> dict:
        """Deterministic state snapshot; no timestamps, replay-stable."""
        st = self.state
        scheme = self._scheme()
        est = estimate(st, scheme)
        p_hat = [float(v) for v in est.p_hat]
        rho_hat = None
        if self.spec.target is not None and all(0.0 < v < 1.0 for v in p_hat):
            rho_hat = [float(v) for v in clamp_target(rho(self.spec.target, p_hat))]
        total = self._burn_in_total()
        burn_in = None
        if total is not None:
            burn_in = {
                "active": st.n < total,
                "completed": min(st.n, total),
                "total": total,
            }
        return {
            "id": self.id,
            "name": self.name,
            "design": descriptor_from_spec(self.spec),
            "arms": self.K,
            "seed": self.seed,
            "n": st.n,
            "counts": {
                "N": [int(v) for v in st.N],
                "N_observed": [int(v) for v in st.N_observed],
                "S_observed": [int(v) for v in st.S],
            },
            "p_hat": p_hat,
            "rho_hat": rho_hat,
            "pending": [int(m) for m in st.pending],
            "burn_in": burn_in,
            "history": [
                {"subject": i, "arm": int(arm), "outcome": out}
                for i, (arm, out) in enumerate(st.history)
            ],
        }


class SessionStore:
    """Sessions plus their append-only JSONL event logs."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict = {}
        self._lock = threading.Lock()
        for path in sorted(self.data_dir.glob("*.jsonl")):
            session = self._replay(path)
            self.sessions[session.id] = session

    def _log_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.jsonl"

    def _append(self, session_id: str, kind: str, payload: dict):
        event = {"ts": time.time(), "kind": kind, "payload": payload}
        with open(self._log_path(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, separators=(",", ":")) + "\n")

    def _replay(self, path: Path) -> Session:
        session = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                kind, payload = event["kind"], event["payload"]
                if kind == "created":
                    session = Session(
                        payload["id"],
                        spec_from_descriptor(payload["design"]),
                        payload["arms"],
                        payload["seed"],
                        payload.get("name", ""),
                    )
                elif kind == "enrolled":
                    if session is None:
                        raise ValueError(f"{path.name}: event before session creation")
                    m, arm = session.enroll()
                    if m != payload["subject"] or arm != payload["assignment"]:
                        raise ValueError(
                            f"{path.name}: replay diverged at subject {payload['subject']}"
                        )
                elif kind == "outcome":
                    if session is None:
                        raise ValueError(f"{path.name}: event before session creation")
                    session.record_outcome(payload["subject"], payload["success"])
                else:
                    raise ValueError(f"{path.name}: unknown event kind {kind!r}")
        if session is None:
            raise ValueError(f"{path.name}: empty session log")
        return session

    def create(self, design: dict, arms: int, seed: int, name: str = "") -> Session:
        spec = spec_from_descriptor(design)
        with self._lock:
            session_id = uuid.uuid4().hex[:12]
            session = Session(session_id, spec, arms, seed, name)
            self.sessions[session_id] = session
            self._append(
                session_id,
                "created",
                {
                    "id": session_id,
                    "design": descriptor_from_spec(session.spec),
                    "arms": session.K,
                    "seed": session.seed,
                    "name": name,
                },
            )
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def enroll(self, session_id: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            m, arm = session.enroll()
            self._append(session_id, "enrolled", {"subject": m, "assignment": arm})
        return {"subject_index": m, "assignment": arm}

    def record_outcome(self, session_id: str, subject: int, success: bool):
        session = self.get(session_id)
        with session.lock:
            session.record_outcome(subject, success)
            self._append(session_id, "outcome", {"subject": subject, "success": bool(success)})
