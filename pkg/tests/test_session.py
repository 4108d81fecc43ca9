"""Live sessions: descriptor wire format, log replay, allocation law.

The frequency test pins the post-burn-in assignment law to hand
arithmetic: after two successes on arm 0 and two failures on arm 1 the
default estimator gives p_hat = (3/4, 1/4), the reciprocal-failure
target gives rho_hat = (3/4, 1/4), and with equal counts and gamma = 2
the fifth subject goes to arm 0 with probability 27/28.
"""

import json
import shutil

import pytest

from alloclab.session import (
    Session,
    SessionStore,
    descriptor_from_spec,
    spec_from_descriptor,
)

DBCD_URN = {"kind": "dbcd", "target": "urn", "gamma": 2.0, "burn_in": 2}

DESCRIPTORS = [
    {"kind": "pw"},
    {"kind": "cr"},
    {"kind": "mcad", "mcad": {"alpha_s": 0.9, "alpha_f": 0.2, "beta_s": 0.8, "beta_f": 0.3}},
    {"kind": "rpw"},
    {"kind": "wei"},
    {"kind": "seu"},
    {"kind": "dl"},
    DBCD_URN,
    {"kind": "rbcd", "target": "rsihr", "alpha": 0.6, "estimator": {"a": 1.0, "b": 1.0}},
]


@pytest.mark.parametrize("desc", DESCRIPTORS, ids=lambda d: d["kind"])
def test_descriptor_round_trip(desc):
    spec = spec_from_descriptor(desc).validated(2)
    echo = descriptor_from_spec(spec)
    again = spec_from_descriptor(echo).validated(2)
    assert descriptor_from_spec(again) == echo
    assert again.kind == desc["kind"]


def test_descriptor_errors():
    with pytest.raises(ValueError, match="object"):
        spec_from_descriptor("pw")
    with pytest.raises(ValueError, match="kind"):
        spec_from_descriptor({})
    with pytest.raises(ValueError, match="unknown design kind"):
        spec_from_descriptor({"kind": "bandit"})
    with pytest.raises(ValueError, match="mcad"):
        spec_from_descriptor({"kind": "mcad"})
    with pytest.raises(ValueError, match="target"):
        spec_from_descriptor({"kind": "dbcd"})
    with pytest.raises(ValueError, match="target"):
        spec_from_descriptor({"kind": "rbcd"})


def _four_subjects(session):
    """Burn-in enrollments plus split outcomes: arm 0 wins, arm 1 loses."""
    for _ in range(4):
        session.enroll()
    session.record_outcome(0, True)
    session.record_outcome(2, True)
    session.record_outcome(1, False)
    session.record_outcome(3, False)


def test_burn_in_round_robin():
    session = Session("s1", spec_from_descriptor(DBCD_URN), 2, seed=5)
    assignments = [session.enroll()[1] for _ in range(4)]
    assert assignments == [0, 1, 0, 1]
    view = session.view()
    assert view["burn_in"] == {"active": False, "completed": 4, "total": 4}


def test_view_counts_and_estimates():
    session = Session("s1", spec_from_descriptor(DBCD_URN), 2, seed=5, name="demo")
    _four_subjects(session)
    view = session.view()
    assert view["name"] == "demo" and view["arms"] == 2 and view["n"] == 4
    assert view["counts"] == {"N": [2, 2], "N_observed": [2, 2], "S_observed": [2, 0]}
    assert view["p_hat"] == [pytest.approx(0.75), pytest.approx(0.25)]
    assert view["rho_hat"] == [pytest.approx(0.75), pytest.approx(0.25)]
    assert view["pending"] == []
    assert [h["outcome"] for h in view["history"]] == [True, False, True, False]


def test_view_pending_before_outcomes():
    session = Session("s1", spec_from_descriptor({"kind": "rpw"}), 2, seed=5)
    session.enroll()
    session.enroll()
    view = session.view()
    assert view["pending"] == [0, 1]
    assert view["burn_in"] is None and view["rho_hat"] is None


def test_outcome_errors():
    session = Session("s1", spec_from_descriptor({"kind": "pw"}), 2, seed=5)
    session.enroll()
    session.record_outcome(0, True)
    with pytest.raises(ValueError, match="already has an outcome"):
        session.record_outcome(0, False)
    with pytest.raises(IndexError):
        session.record_outcome(7, True)


def test_same_seed_same_assignments():
    a = Session("a", spec_from_descriptor({"kind": "rpw"}), 2, seed=31)
    b = Session("b", spec_from_descriptor({"kind": "rpw"}), 2, seed=31)
    for _ in range(30):
        ma, arm_a = a.enroll()
        mb, arm_b = b.enroll()
        assert (ma, arm_a) == (mb, arm_b)
        a.record_outcome(ma, ma % 3 == 0)
        b.record_outcome(mb, mb % 3 == 0)


def test_fifth_assignment_law():
    hits = 0
    trials = 400
    for seed in range(trials):
        session = Session("s", spec_from_descriptor(DBCD_URN), 2, seed=seed)
        _four_subjects(session)
        hits += session.enroll()[1] == 0
    # 27/28 with binomial 3 sigma ~ 0.028
    assert abs(hits / trials - 27 / 28) < 0.03


# -- store persistence -------------------------------------------------


def test_store_create_persist_reopen(tmp_path):
    store = SessionStore(tmp_path)
    session = store.create(DBCD_URN, arms=2, seed=12, name="ward")
    sid = session.id
    for _ in range(4):
        store.enroll(sid)
    store.record_outcome(sid, 0, True)
    store.record_outcome(sid, 2, True)
    store.record_outcome(sid, 1, False)
    store.record_outcome(sid, 3, False)
    before = json.dumps(store.get(sid).view(), sort_keys=True)

    reopened = SessionStore(tmp_path)
    after = json.dumps(reopened.get(sid).view(), sort_keys=True)
    assert after == before


def test_reopened_store_continues_identically(tmp_path):
    store = SessionStore(tmp_path / "a")
    sid = store.create({"kind": "dl"}, arms=3, seed=9).id
    for m in range(12):
        store.enroll(sid)
        store.record_outcome(sid, m, m % 2 == 0)
    shutil.copytree(tmp_path / "a", tmp_path / "b")
    twin = SessionStore(tmp_path / "b")
    for _ in range(8):
        assert twin.enroll(sid) == store.enroll(sid)


def test_store_unknown_session(tmp_path):
    store = SessionStore(tmp_path)
    with pytest.raises(KeyError):
        store.get("nope")


def test_tampered_log_rejected(tmp_path):
    store = SessionStore(tmp_path)
    sid = store.create({"kind": "rpw"}, arms=2, seed=4).id
    for m in range(6):
        store.enroll(sid)
        store.record_outcome(sid, m, m % 2 == 0)
    log = tmp_path / f"{sid}.jsonl"
    lines = log.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines):
        event = json.loads(line)
        if event["kind"] == "enrolled" and event["payload"]["subject"] == 3:
            event["payload"]["assignment"] = 1 - event["payload"]["assignment"]
            lines[i] = json.dumps(event, separators=(",", ":"))
            break
    log.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(ValueError, match="replay diverged at subject 3"):
        SessionStore(tmp_path)


def test_empty_log_rejected(tmp_path):
    (tmp_path / "ghost.jsonl").write_text("", encoding="utf-8")
    with pytest.raises(ValueError, match="empty session log"):
        SessionStore(tmp_path)
