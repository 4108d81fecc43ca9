"""Acceptance gate: headline behaviors at full scale, one verdict line each.

Every test prints a single PASS/FAIL line (run with ``pytest -s`` to see
them stream).  Studies run from the checked-in scenario files: two arms
at p = (0.7, 0.5), n = 2000, R = 20000, seed 20250301 unless a grid over
n is noted.  Tolerances: Monte Carlo means use 3 standard errors; scaled
variances against an analytic value use 3 * sigma2 * sqrt(2/(R-1)) (the
normal-theory SE of a variance); values pinned only as "near" use 10%
relative slack.
"""

import time
from dataclasses import replace
from pathlib import Path

import pytest

from alloclab.asymptotics import (
    lower_bound,
    lower_bound_closed_form,
    var_dl,
    var_mcad,
    var_pw,
    worked_examples,
)
from alloclab.cli import build_scenario, parse_config
from alloclab.core import BernoulliArms, RandomStream
from alloclab.markov import MCADParams, compose_coefficients
from alloclab.montecarlo import run_study
from alloclab.targets import TargetAllocation, rho

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
GRID = (500, 2000, 8000)


def _study(filename, **overrides):
    cfg = build_scenario(parse_config(SCENARIOS / filename))
    if overrides:
        cfg = replace(cfg, **overrides)
    return run_study(cfg)


def _var_tol(sigma2, R):
    return 3.0 * sigma2 * (2.0 / (R - 1)) ** 0.5


def _verdict(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}: {label} ({detail})"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def pw_report():
    return _study("pw_base.cfg")


@pytest.fixture(scope="module")
def rpw_report():
    return _study("rpw_base.cfg")


@pytest.fixture(scope="module")
def dl_grid():
    return {n: _study("dl_base.cfg", n=n) for n in GRID}


@pytest.fixture(scope="module")
def dbcd_reports():
    return _study("dbcd_urn_g0.cfg"), _study("dbcd_urn_g2.cfg")


@pytest.fixture(scope="module")
def rbcd_report():
    return _study("rbcd_rsihr.cfg")


def test_formula_identities():
    t0 = time.perf_counter()
    rng = RandomStream(99, 0).generator()
    targets = {kind: TargetAllocation(kind) for kind in ("urn", "neyman", "rsihr")}
    pw_wired = MCADParams(1.0, 0.0, 1.0, 0.0)
    worst = 0.0
    for _ in range(1000):
        arms = BernoulliArms(0.05 + 0.9 * rng.random(2))
        for kind, target in targets.items():
            closed = lower_bound_closed_form(kind, arms)
            worst = max(worst, abs(closed - lower_bound(target, arms).sigma2))
        s_pw = var_pw(arms).sigma2
        worst = max(worst, abs(var_dl(arms).sigma2 - s_pw))
        worst = max(worst, abs(s_pw - lower_bound_closed_form("urn", arms)))
        worst = max(worst, abs(var_mcad(compose_coefficients(arms, pw_wired)).sigma2 - s_pw))
        for row in worked_examples(arms, (0.0, 2.0)):
            worst = max(worst, abs(row.closed_form - row.general))
    runtime = time.perf_counter() - t0
    _verdict(
        "formula identities agree to 1e-10 across 1000 random p",
        worst < 1e-10 and runtime < 1.0,
        f"worst |diff| {worst:.2e}, runtime {runtime:.2f}s",
    )


def test_play_the_winner_limit(pw_report):
    rep = pw_report
    mean_gap = abs(float(rep.mean_proportions[0]) - 0.625)
    mean_tol = 3.0 * float(rep.se_proportions[0])
    var_gap = abs(rep.scaled_variance - 0.3515625)
    var_tol = _var_tol(0.3515625, rep.cfg.replicates)
    _verdict(
        "play-the-winner mean and scaled variance at the analytic values",
        mean_gap < mean_tol and var_gap < var_tol,
        f"mean gap {mean_gap:.2e} < {mean_tol:.2e}, var gap {var_gap:.2e} < {var_tol:.2e}",
    )


def test_randomized_play_the_winner(pw_report, rpw_report):
    rep = rpw_report
    var_gap = abs(rep.scaled_variance - 1.328125)
    near = var_gap < 0.10 * 1.328125
    louder = rep.scaled_variance > pw_report.scaled_variance
    grid = [_study("rpw_degenerate.cfg", n=n).scaled_variance for n in GRID]
    diverging = grid[0] < grid[1] < grid[2]
    _verdict(
        "randomized play-the-winner variance near 1.3281, above PW, and "
        "diverging when q1+q2 < 1/2",
        near and louder and diverging,
        f"var {rep.scaled_variance:.4f}, pw {pw_report.scaled_variance:.4f}, "
        f"degenerate grid {', '.join(f'{v:.1f}' for v in grid)}",
    )


def test_drop_the_loser(pw_report, dl_grid):
    dists = [abs(float(dl_grid[n].mean_proportions[0]) - 0.625) for n in GRID]
    converging = dists[0] >= dists[1] >= dists[2] and dists[-1] < 1e-3
    rep = dl_grid[2000]
    se = (rep.se_scaled_variance**2 + pw_report.se_scaled_variance**2) ** 0.5
    var_gap = abs(rep.scaled_variance - pw_report.scaled_variance)
    _verdict(
        "drop-the-loser proportion converges to 0.625 with PW-equal variance",
        converging and var_gap < 3.0 * se,
        f"distances {', '.join(f'{d:.1e}' for d in dists)}, "
        f"var gap {var_gap:.2e} < {3.0 * se:.2e}",
    )


def test_doubly_adaptive_coin(dbcd_reports):
    flat, sharp = dbcd_reports
    gap0 = abs(flat.scaled_variance - 0.9375)
    gap2 = abs(sharp.scaled_variance - 0.46875)
    _verdict(
        "doubly adaptive coin variance near 0.9375 (gamma 0) and 0.4688 "
        "(gamma 2), decreasing in gamma",
        gap0 < 0.09375 and gap2 < 0.046875 and sharp.scaled_variance < flat.scaled_variance,
        f"gamma0 {flat.scaled_variance:.4f}, gamma2 {sharp.scaled_variance:.4f}",
    )


def test_fully_randomized_coin_attains_floor(rbcd_report):
    rep = rbcd_report
    target = float(rho(TargetAllocation("rsihr"), rep.cfg.arms)[0])
    mean_gap = abs(float(rep.mean_proportions[0]) - target)
    mean_tol = 3.0 * float(rep.se_proportions[0])
    floor = lower_bound(TargetAllocation("rsihr"), rep.cfg.arms).sigma2
    var_gap = abs(rep.scaled_variance - floor)
    var_tol = _var_tol(floor, rep.cfg.replicates)
    _verdict(
        "fully randomized coin hits the sqrt-p allocation at the information floor",
        mean_gap < mean_tol and var_gap < var_tol,
        f"mean gap {mean_gap:.2e} < {mean_tol:.2e}, "
        f"var {rep.scaled_variance:.5f} vs floor {floor:.5f} (tol {var_tol:.2e})",
    )


def test_delayed_responses(dl_grid, dbcd_reports):
    details = []
    ok = True
    for name, base_file, undelayed in (
        ("dl", "dl_delayed.cfg", dl_grid[2000]),
        ("dbcd", "dbcd_delayed.cfg", dbcd_reports[1]),
    ):
        grid = {n: _study(base_file, n=n) for n in GRID}
        rep = grid[2000]
        mean_gap = abs(float(rep.mean_proportions[0]) - float(undelayed.mean_proportions[0]))
        mean_tol = 3.0 * (
            float(rep.se_proportions[0]) ** 2 + float(undelayed.se_proportions[0]) ** 2
        ) ** 0.5
        gaps = [grid[n].mean_success_gap_scaled for n in GRID]
        ok = (
            ok
            and mean_gap < mean_tol
            and rep.mean_terminal_pending < 3.0
            and gaps[0] >= gaps[1] >= gaps[2]
        )
        details.append(
            f"{name}: mean gap {mean_gap:.1e} < {mean_tol:.1e}, "
            f"pending {rep.mean_terminal_pending:.2f}, "
            f"gap/sqrt(n) {' >= '.join(f'{g:.4f}' for g in gaps)}"
        )
    _verdict(
        "delayed responses keep the undelayed limits with vanishing backlog",
        ok,
        "; ".join(details),
    )


def test_power_and_ethics():
    ethical = _study("power_dbcd_rsihr.cfg")
    budget = 0.4 * ethical.cfg.n
    fewer = ethical.failures + 3.0 * ethical.se_failures < budget
    null = _study("null_dbcd_rsihr.json")
    level_gap = abs(null.power - null.cfg.test_level)
    calibrated = level_gap < 3.0 * null.se_power
    _verdict(
        "sqrt-p coin spares failures versus an even split and keeps test level",
        fewer and calibrated,
        f"failures {ethical.failures:.2f} + 3se < {budget:.0f}, "
        f"null rejection {null.power:.4f} (gap {level_gap:.4f} < {3.0 * null.se_power:.4f})",
    )
