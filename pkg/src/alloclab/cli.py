"""Command-line front end: asympt, simulate, compare, serve.

Scenario configs are flat ``key = value`` files (``#`` comments allowed)
or JSON objects (nested or dot-keyed); both map onto the same typed key
set.  Every run is reproducible from the config plus the seed, both of
which are embedded in the emitted reports.

Documented keys (see README for the full table): name, design.kind,
arms.p, sim.n, sim.replicates, sim.seed, sim.test_level, mcad.alpha_s,
mcad.alpha_f, mcad.beta_s, mcad.beta_f, urn.y0, dl.z0, dbcd.gamma,
dbcd.burn_in, rbcd.alpha, estimator.a, estimator.b, target.kind,
delay.entry_rate, delay.response_rates.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .asymptotics import lower_bound, table2_variability
from .core import BernoulliArms, EstimatorScheme
from .delay import DelayModel
from .engine import DesignSpec, active_backend
from .markov import MCADParams
from .montecarlo import CSV_COLUMNS, SimConfig, StudyReport, analytic_reference, run_study
from .targets import TargetAllocation
from .urn import Regime

__all__ = ["main", "parse_config", "build_scenario", "ConfigError"]


class ConfigError(Exception):
    """Configuration problem; the message names the offending key."""


def _parse_floats(text: str) -> tuple:
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v != "")

def _parse_ints(text: str) -> tuple:
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v != "")


_SCHEMA = {
    "name": str,
    "design.kind": str,
    "arms.p": _parse_floats,
    "sim.n": int,
    "sim.replicates": int,
    "sim.seed": int,
    "sim.test_level": float,
    "mcad.alpha_s": float,
    "mcad.alpha_f": float,
    "mcad.beta_s": float,
    "mcad.beta_f": float,
    "urn.y0": _parse_floats,
    "dl.z0": _parse_ints,
    "dbcd.gamma": float,
    "dbcd.burn_in": int,
    "rbcd.alpha": float,
    "estimator.a": float,
    "estimator.b": float,
    "target.kind": str,
    "delay.entry_rate": float,
    "delay.response_rates": _parse_floats,
}


def _flatten(prefix: str, value, out: dict):
    if isinstance(value, dict):
        for key, inner in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), inner, out)
    elif isinstance(value, (list, tuple)):
        out[prefix] = ",".join(str(v) for v in value)
    else:
        out[prefix] = value


def parse_config(path) -> dict:
    """Read a scenario file (key=value or JSON) into a raw key map."""
    text = Path(path).read_text(encoding="utf-8")
    raw: dict = {}
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config {path}: {exc}")
        if not isinstance(data, dict):
            raise ConfigError(f"config {path}: top level must be an object")
        _flatten("", data, raw)
        return raw
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config {path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        raw[key.strip()] = value.strip()
    return raw


def _typed(raw: dict) -> dict:
    typed = {}
    for key, value in raw.items():
        parser = _SCHEMA.get(key)
        if parser is None:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            typed[key] = parser(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key!r}: {exc}")
    return typed


def _require(typed: dict, key: str):
    if key not in typed:
        raise ConfigError(f"missing required config key {key!r}")
    return typed[key]


def build_scenario(raw: dict, seed_override: Optional[int] = None) -> SimConfig:
    """Typed scenario from a raw key map; errors name the offending key."""
    typed = _typed(raw)
    kind = str(_require(typed, "design.kind")).lower()
    try:
        arms = BernoulliArms(_require(typed, "arms.p"))
    except ValueError as exc:
        raise ConfigError(f"arms.p: {exc}")

    scheme = EstimatorScheme(typed.get("estimator.a", 1.0), typed.get("estimator.b", 2.0))
    target = None
    if "target.kind" in typed:
        try:
            target = TargetAllocation(typed["target.kind"])
        except ValueError as exc:
            raise ConfigError(f"target.kind: {exc}")

    try:
        if kind == "pw":
            spec = DesignSpec.play_the_winner()
        elif kind == "cr":
            spec = DesignSpec.complete_randomization()
        elif kind == "mcad":
            stay = [f"mcad.{x}" for x in ("alpha_s", "alpha_f", "beta_s", "beta_f")]
            spec = DesignSpec.markov_chain(MCADParams(*[_require(typed, k) for k in stay]))
        elif kind == "rpw":
            spec = DesignSpec.randomized_play_the_winner(typed.get("urn.y0"))
        elif kind == "wei":
            spec = DesignSpec.urn(typed.get("urn.y0"))
        elif kind == "seu":
            spec = DesignSpec.estimate_adjusted_urn(typed.get("urn.y0"))
        elif kind == "dl":
            spec = DesignSpec.drop_the_loser(typed.get("dl.z0"))
        elif kind == "dbcd":
            if target is None:
                raise ConfigError("missing required config key 'target.kind'")
            spec = DesignSpec.doubly_adaptive(
                target,
                gamma=typed.get("dbcd.gamma", 2.0),
                burn_in=typed.get("dbcd.burn_in", 2),
                scheme=scheme,
            )
        elif kind == "rbcd":
            if target is None:
                raise ConfigError("missing required config key 'target.kind'")
            spec = DesignSpec.randomized_coin(
                target, alpha=typed.get("rbcd.alpha", 2.0 / 3.0), scheme=scheme
            )
        else:
            raise ConfigError(f"design.kind: unknown design kind {kind!r}")
        spec.validated(arms.K)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"design.kind={kind}: {exc}")

    delay = None
    if "delay.entry_rate" in typed or "delay.response_rates" in typed:
        entry = _require(typed, "delay.entry_rate")
        rates = _require(typed, "delay.response_rates")
        if len(rates) == 1:
            rates = rates * arms.K
        try:
            delay = DelayModel(entry, rates)
        except ValueError as exc:
            raise ConfigError(f"delay.response_rates: {exc}")
        if delay.K != arms.K:
            raise ConfigError("delay.response_rates: need one rate per arm (or a single shared rate)")

    seed = seed_override if seed_override is not None else typed.get("sim.seed", 2025)
    try:
        return SimConfig(
            spec=spec,
            arms=arms,
            n=typed.get("sim.n", 1000),
            replicates=typed.get("sim.replicates", 1000),
            master_seed=int(seed),
            delay=delay,
            test_level=typed.get("sim.test_level", 0.05),
            name=typed.get("name", kind),
        )
    except ValueError as exc:
        raise ConfigError(f"sim.*: {exc}")


# ---------------------------------------------------------------------------
# asympt


def _regime_flag(summary, arms: BernoulliArms) -> str:
    if summary.regime is Regime.NORMAL:
        return "normal"
    if arms.K == 2:
        return "unknown: q1+q2<1/2"
    return "unknown: subdominant eigenvalue >= 1/2"


def asympt_report(cfg: SimConfig) -> dict:
    """Closed-form report: limit allocation, variance or regime flag,
    information floor, and the matched-target family comparison."""
    spec = cfg.spec.validated(cfg.arms.K)
    arms = cfg.arms
    summary, bound = analytic_reference(spec, arms)
    out: dict = {
        "name": cfg.name,
        "design": spec.kind,
        "arms": [float(v) for v in arms.p],
        "target": spec.target.kind if spec.target is not None else None,
    }
    if summary is not None:
        out["v"] = [float(x) for x in summary.v]
        out["sigma2"] = summary.sigma2
        out["regime"] = _regime_flag(summary, arms)
        out["cov"] = (
            [[float(x) for x in row] for row in summary.cov] if summary.cov is not None else None
        )
    if bound is not None:
        out["lower_bound"] = {
            "target": bound.target.kind,
            "sigma2": bound.sigma2 if arms.K == 2 else None,
            "Sigma": [[float(x) for x in row] for row in bound.Sigma],
        }
    else:
        out["lower_bound"] = None
    table_target = spec.target
    if table_target is None and spec.kind in ("pw", "rpw", "wei", "seu", "dl"):
        table_target = TargetAllocation("urn")
    if table_target is not None:
        gamma = spec.dbcd.gamma if spec.dbcd is not None else 2.0
        rows = []
        for model in ("seu", "gdl", "dbcd"):
            Sigma = table2_variability(
                model, table_target, arms, gamma=gamma if model == "dbcd" else None
            )
            rows.append(
                {
                    "model": model,
                    "gamma": gamma if model == "dbcd" else None,
                    "sigma2": float(Sigma[0, 0]) if arms.K == 2 else None,
                    "Sigma": [[float(x) for x in row] for row in Sigma],
                }
            )
        out["table2"] = {"target": table_target.kind, "rows": rows}
    else:
        out["table2"] = None
    return out


def _asympt_csv_row(report: dict) -> dict:
    lb = report.get("lower_bound")
    rows = {r["model"]: r for r in (report["table2"]["rows"] if report["table2"] else [])}
    return {
        "name": report["name"],
        "design": report["design"],
        "target": report["target"] or "",
        "p": ",".join(str(v) for v in report["arms"]),
        "v1": report.get("v", [None])[0],
        "sigma2": report.get("sigma2"),
        "regime": report.get("regime", ""),
        "lb_sigma2": lb["sigma2"] if lb else "",
        "seu_sigma2": rows.get("seu", {}).get("sigma2", ""),
        "gdl_sigma2": rows.get("gdl", {}).get("sigma2", ""),
        "dbcd_sigma2": rows.get("dbcd", {}).get("sigma2", ""),
    }


# ---------------------------------------------------------------------------
# emission helpers


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, rows: list, columns) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _fmt(value, width=10, digits=4) -> str:
    if value is None or value == "":
        return " " * (width - 1) + "-"
    if isinstance(value, float):
        return f"{value:{width}.{digits}f}"
    return f"{value!s:>{width}}"


def _print_study(report: StudyReport, file=None) -> None:
    # resolve the stream at call time so redirection works
    file = sys.stdout if file is None else file
    cfg = report.cfg
    spec = cfg.spec.validated(cfg.arms.K)
    an = report.analytic
    print(f"scenario {cfg.name}: design={spec.kind} n={cfg.n} R={cfg.replicates} "
          f"seed={cfg.master_seed} backend={active_backend()}"
          + (" delayed" if cfg.delay is not None else ""), file=file)
    v1 = float(report.mean_proportions[0])
    line = f"  proportion[0] = {v1:.4f} (se {float(report.se_proportions[0]):.4f})"
    if an is not None:
        line += f"   analytic {float(an.v[0]):.4f}"
    print(line, file=file)
    line = f"  scaled var    = {report.scaled_variance:.4f} (se {report.se_scaled_variance:.4f})"
    if an is not None and an.sigma2 is not None:
        line += f"   analytic {an.sigma2:.4f}   ratio {report.variance_ratio:.3f}"
    elif an is not None:
        line += f"   regime {_regime_flag(an, cfg.arms)}"
    print(line, file=file)
    if report.bound is not None and cfg.arms.K == 2:
        print(f"  lower bound   = {report.bound.sigma2:.4f}", file=file)
    if report.power is not None:
        print(f"  wald power    = {report.power:.4f} (se {report.se_power:.4f})", file=file)
    print(f"  failures      = {report.failures:.2f} (se {report.se_failures:.2f})", file=file)
    if report.mean_terminal_pending is not None:
        print(
            f"  pending: terminal mean {report.mean_terminal_pending:.2f}, "
            f"queue mean {report.mean_queue_pending:.2f}, max {report.max_pending}, "
            f"success gap/sqrt(n) {report.mean_success_gap_scaled:.4f}",
            file=file,
        )


# ---------------------------------------------------------------------------
# commands


def _print_asympt(report: dict, file=None) -> None:
    file = sys.stdout if file is None else file
    print(f"scenario {report['name']}: design={report['design']} "
          f"p={','.join(str(v) for v in report['arms'])}"
          + (f" target={report['target']}" if report["target"] else ""), file=file)
    if "v" in report:
        print(f"  limit allocation v = {', '.join(f'{x:.4f}' for x in report['v'])}", file=file)
        if report["sigma2"] is not None:
            print(f"  scaled variance    = {report['sigma2']:.4f}", file=file)
        else:
            print(f"  scaled variance    = ({report['regime']})", file=file)
    lb = report.get("lower_bound")
    if lb is not None and lb["sigma2"] is not None:
        print(f"  information floor  = {lb['sigma2']:.4f}  (target {lb['target']})", file=file)
    if report.get("table2"):
        print(f"  matched-target comparison ({report['table2']['target']}):", file=file)
        for row in report["table2"]["rows"]:
            label = row["model"] + (f"(gamma={row['gamma']:g})" if row["gamma"] is not None else "")
            if row["sigma2"] is not None:
                print(f"    {label:<14} sigma2 = {row['sigma2']:.4f}", file=file)
            else:
                diag = ", ".join(f"{row['Sigma'][k][k]:.4f}" for k in range(len(row["Sigma"])))
                print(f"    {label:<14} diag(Sigma) = {diag}", file=file)


def cmd_asympt(args) -> int:
    cfg = build_scenario(parse_config(args.config), args.seed)
    report = asympt_report(cfg)
    if args.format == "json":
        print(json.dumps(report, indent=2))
    elif args.format == "csv":
        row = _asympt_csv_row(report)
        writer = csv.DictWriter(sys.stdout, fieldnames=list(row))
        writer.writeheader()
        writer.writerow(row)
    else:
        _print_asympt(report)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / f"{cfg.name}_asympt.json", report)
        row = _asympt_csv_row(report)
        _write_csv(out / f"{cfg.name}_asympt.csv", [row], row.keys())
    return 0


def cmd_simulate(args) -> int:
    cfg = build_scenario(parse_config(args.config), args.seed)
    report = run_study(cfg)
    payload = report.to_json_dict()
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    elif args.format == "csv":
        row = report.csv_row()
        writer = csv.DictWriter(sys.stdout, fieldnames=list(CSV_COLUMNS))
        writer.writeheader()
        writer.writerow(row)
    else:
        _print_study(report)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / f"{cfg.name}.json", payload)
    _write_csv(out / f"{cfg.name}.csv", [report.csv_row()], CSV_COLUMNS)
    return 0


def cmd_compare(args) -> int:
    cfgs = [build_scenario(parse_config(path), args.seed) for path in args.config]
    if len(cfgs) < 2:
        raise ConfigError("compare needs at least two --config scenarios")
    base = cfgs[0]
    for cfg in cfgs[1:]:
        if not np.array_equal(cfg.arms.p, base.arms.p):
            raise ConfigError(f"arms.p: scenario {cfg.name!r} does not match {base.name!r}")
        if cfg.n != base.n:
            raise ConfigError(f"sim.n: scenario {cfg.name!r} does not match {base.name!r}")
    reports = [run_study(cfg) for cfg in cfgs]
    header = ("scenario", "design", "v1_hat", "sigma2_hat", "sigma2_an", "ratio", "power", "failures")
    print("  ".join(f"{h:>10}" for h in header))
    for rep in reports:
        spec = rep.cfg.spec.validated(rep.cfg.arms.K)
        an = rep.analytic.sigma2 if rep.analytic is not None else None
        cells = (
            rep.cfg.name[:10],
            spec.kind,
            float(rep.mean_proportions[0]),
            rep.scaled_variance,
            an,
            rep.variance_ratio,
            rep.power,
            rep.failures,
        )
        print("  ".join(_fmt(c) for c in cells))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "compare.json", [rep.to_json_dict() for rep in reports])
    _write_csv(out / "compare.csv", [rep.csv_row() for rep in reports], CSV_COLUMNS)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(args.data_dir, console_dir=args.console_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="alloc-lab",
        description="Response-adaptive randomization lab: closed-form asymptotics, "
        "Monte Carlo studies, and a live allocation session server.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override sim.seed")
    common.add_argument("--out-dir", default="reports", help="directory for report files")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text",
                        help="stdout format (files always get json+csv)")

    p_asympt = sub.add_parser("asympt", parents=[common],
                              help="closed-form limits for one scenario")
    p_asympt.add_argument("--config", required=True)
    p_asympt.set_defaults(func=cmd_asympt)

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="Monte Carlo study for one scenario")
    p_sim.add_argument("--config", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", parents=[common],
                           help="side-by-side studies for several scenarios")
    p_cmp.add_argument("--config", required=True, nargs="+")
    p_cmp.set_defaults(func=cmd_compare)

    p_serve = sub.add_parser("serve", help="run the live allocation session API")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--data-dir", default="sessions")
    p_serve.add_argument("--console-dir", default=None,
                         help="serve a built trial console from this directory at /console")
    p_serve.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
