"""Config parsing, scenario construction, and the four subcommands.

Numeric spot checks reuse the frozen two-arm values (rpw 1.328125,
floor 0.3515625); everything else is structural: exit codes, error
text naming the offending key, and byte-stable report files.
"""

import json

import numpy as np
import pytest

from alloclab.cli import ConfigError, build_scenario, main, parse_config


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


MINIMAL = "design.kind = pw\narms.p = 0.7, 0.5\n"


# -- parse_config -----------------------------------------------------


def test_parse_key_value_with_comments(tmp_path):
    path = _write(
        tmp_path,
        "a.cfg",
        "# scenario header\n"
        "name = demo   # trailing comment\n"
        "\n"
        "arms.p = 0.7, 0.5\n"
        "sim.n=250\n",
    )
    raw = parse_config(path)
    assert raw == {"name": "demo", "arms.p": "0.7, 0.5", "sim.n": "250"}


def test_parse_json_nested_and_flat(tmp_path):
    path = _write(
        tmp_path,
        "a.json",
        json.dumps({"design": {"kind": "dbcd"}, "target.kind": "urn", "arms": {"p": [0.7, 0.5]}}),
    )
    raw = parse_config(path)
    # arrays are joined back to comma strings so both formats share parsers
    assert raw == {"design.kind": "dbcd", "target.kind": "urn", "arms.p": "0.7,0.5"}


def test_parse_rejects_bare_line(tmp_path):
    path = _write(tmp_path, "a.cfg", "design.kind = pw\njust words\n")
    with pytest.raises(ConfigError, match="expected key = value"):
        parse_config(path)


def test_parse_rejects_broken_json(tmp_path):
    path = _write(tmp_path, "a.json", "{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config(path)
    path = _write(tmp_path, "b.json", "[1, 2]")
    # a top-level array does not look like JSON config, so it falls through
    # to the key=value reader and fails there
    with pytest.raises(ConfigError, match="expected key = value"):
        parse_config(path)


# -- build_scenario ---------------------------------------------------


def test_defaults_fill_in(tmp_path):
    cfg = build_scenario(parse_config(_write(tmp_path, "a.cfg", MINIMAL)))
    assert cfg.spec.kind == "pw"
    assert cfg.name == "pw"
    assert (cfg.n, cfg.replicates, cfg.master_seed) == (1000, 1000, 2025)
    assert cfg.test_level == 0.05
    assert cfg.delay is None
    np.testing.assert_allclose(cfg.arms.p, [0.7, 0.5])


def test_seed_override_wins(tmp_path):
    raw = parse_config(_write(tmp_path, "a.cfg", MINIMAL + "sim.seed = 11\n"))
    assert build_scenario(raw).master_seed == 11
    assert build_scenario(raw, seed_override=99).master_seed == 99


def test_unknown_key_named(tmp_path):
    raw = parse_config(_write(tmp_path, "a.cfg", MINIMAL + "sim.replicats = 5\n"))
    with pytest.raises(ConfigError, match="sim.replicats"):
        build_scenario(raw)


def test_missing_design_kind(tmp_path):
    raw = parse_config(_write(tmp_path, "a.cfg", "arms.p = 0.7, 0.5\n"))
    with pytest.raises(ConfigError, match="design.kind"):
        build_scenario(raw)


def test_dbcd_requires_target(tmp_path):
    raw = parse_config(_write(tmp_path, "a.cfg", "design.kind = dbcd\narms.p = 0.7, 0.5\n"))
    with pytest.raises(ConfigError, match="target.kind"):
        build_scenario(raw)


def test_bad_arm_probability_named(tmp_path):
    raw = parse_config(_write(tmp_path, "a.cfg", "design.kind = pw\narms.p = 0.7, 1.5\n"))
    with pytest.raises(ConfigError, match="arms.p"):
        build_scenario(raw)


def test_unknown_design_kind(tmp_path):
    raw = parse_config(_write(tmp_path, "a.cfg", "design.kind = urn9\narms.p = 0.7, 0.5\n"))
    with pytest.raises(ConfigError, match="urn9"):
        build_scenario(raw)


def test_delay_single_rate_broadcasts(tmp_path):
    raw = parse_config(
        _write(
            tmp_path,
            "a.cfg",
            "design.kind = dl\narms.p = 0.7, 0.5, 0.6\n"
            "delay.entry_rate = 1.0\ndelay.response_rates = 0.5\n",
        )
    )
    cfg = build_scenario(raw)
    assert cfg.delay is not None and cfg.delay.K == 3
    np.testing.assert_allclose(cfg.delay.response_rates, [0.5] * 3)


def test_delay_rate_count_must_match_arms(tmp_path):
    raw = parse_config(
        _write(
            tmp_path,
            "a.cfg",
            "design.kind = dl\narms.p = 0.7, 0.5, 0.6\n"
            "delay.entry_rate = 1.0\ndelay.response_rates = 0.5, 0.5\n",
        )
    )
    with pytest.raises(ConfigError, match="one rate per arm"):
        build_scenario(raw)


def test_estimator_scheme_reaches_spec(tmp_path):
    raw = parse_config(
        _write(
            tmp_path,
            "a.cfg",
            "design.kind = rbcd\ntarget.kind = urn\narms.p = 0.7, 0.5\n"
            "estimator.a = 1\nestimator.b = 1\nrbcd.alpha = 0.5\n",
        )
    )
    spec = build_scenario(raw).spec
    assert spec.rbcd.alpha == 0.5
    assert (spec.rbcd.scheme.a, spec.rbcd.scheme.b) == (1.0, 1.0)


def test_mcad_requires_all_four_rates(tmp_path):
    raw = parse_config(
        _write(tmp_path, "a.cfg", "design.kind = mcad\narms.p = 0.7, 0.5\nmcad.alpha_s = 0.9\n")
    )
    with pytest.raises(ConfigError, match="mcad.alpha_f"):
        build_scenario(raw)


# -- main() entry point -----------------------------------------------


def test_main_unknown_key_exit_code(tmp_path, capsys):
    path = _write(tmp_path, "a.cfg", MINIMAL + "sim.replicats = 5\n")
    code = main(["asympt", "--config", str(path), "--out-dir", str(tmp_path / "out")])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and "sim.replicats" in err


def test_asympt_text(tmp_path, capsys):
    path = _write(tmp_path, "a.cfg", "design.kind = rpw\narms.p = 0.7, 0.5\n")
    assert main(["asympt", "--config", str(path), "--out-dir", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out
    assert "1.3281" in out
    assert "0.3516" in out  # information floor for the urn target
    assert (tmp_path / "out" / "rpw_asympt.json").exists()
    assert (tmp_path / "out" / "rpw_asympt.csv").exists()


def test_asympt_degenerate_flag(tmp_path, capsys):
    path = _write(tmp_path, "a.cfg", "design.kind = rpw\narms.p = 0.9, 0.9\n")
    assert main(["asympt", "--config", str(path), "--out-dir", str(tmp_path / "out")]) == 0
    assert "unknown: q1+q2<1/2" in capsys.readouterr().out


def test_asympt_json(tmp_path, capsys):
    path = _write(tmp_path, "a.cfg", "design.kind = rpw\narms.p = 0.7, 0.5\n")
    code = main(
        ["asympt", "--config", str(path), "--format", "json", "--out-dir", str(tmp_path / "out")]
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["sigma2"] == pytest.approx(1.328125)
    assert report["lower_bound"]["sigma2"] == pytest.approx(0.3515625)
    rows = {r["model"]: r["sigma2"] for r in report["table2"]["rows"]}
    assert rows["seu"] == pytest.approx(2.34375)
    assert rows["gdl"] == pytest.approx(0.703125)


def test_asympt_csv_header(tmp_path, capsys):
    path = _write(tmp_path, "a.cfg", "design.kind = pw\narms.p = 0.7, 0.5\n")
    code = main(
        ["asympt", "--config", str(path), "--format", "csv", "--out-dir", str(tmp_path / "out")]
    )
    assert code == 0
    header = capsys.readouterr().out.splitlines()[0]
    assert header.split(",")[:4] == ["name", "design", "target", "p"]


TINY = "design.kind = pw\narms.p = 0.7, 0.5\nsim.n = 200\nsim.replicates = 50\nname = tiny\n"


def test_simulate_writes_reports(tmp_path, capsys):
    path = _write(tmp_path, "a.cfg", TINY)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(path), "--out-dir", str(out)]) == 0
    text = capsys.readouterr().out
    assert "scenario tiny" in text and "scaled var" in text
    first = (out / "tiny.json").read_bytes()
    assert (out / "tiny.csv").read_text(encoding="utf-8").count("\n") == 2
    # same seed, same bytes
    assert main(["simulate", "--config", str(path), "--out-dir", str(out)]) == 0
    capsys.readouterr()
    assert (out / "tiny.json").read_bytes() == first


def test_simulate_seed_override_changes_results(tmp_path, capsys):
    path = _write(tmp_path, "a.cfg", TINY)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(path), "--out-dir", str(out)]) == 0
    first = json.loads((out / "tiny.json").read_text(encoding="utf-8"))
    assert main(["simulate", "--config", str(path), "--seed", "777", "--out-dir", str(out)]) == 0
    second = json.loads((out / "tiny.json").read_text(encoding="utf-8"))
    capsys.readouterr()
    assert second["seed"] == 777
    assert second["scaled_variance"] != first["scaled_variance"]


def test_compare_needs_two_configs(tmp_path, capsys):
    path = _write(tmp_path, "a.cfg", TINY)
    code = main(["compare", "--config", str(path), "--out-dir", str(tmp_path / "out")])
    assert code == 2
    assert "at least two" in capsys.readouterr().err


def test_compare_rejects_mismatched_arms(tmp_path, capsys):
    a = _write(tmp_path, "a.cfg", TINY)
    b = _write(tmp_path, "b.cfg", TINY.replace("0.7, 0.5", "0.6, 0.5").replace("tiny", "other"))
    code = main(["compare", "--config", str(a), str(b), "--out-dir", str(tmp_path / "out")])
    assert code == 2
    err = capsys.readouterr().err
    assert "arms.p" in err and "other" in err


def test_compare_table_and_reports(tmp_path, capsys):
    a = _write(tmp_path, "a.cfg", TINY)
    b = _write(tmp_path, "b.cfg", TINY.replace("pw", "cr").replace("tiny", "coin"))
    out = tmp_path / "out"
    assert main(["compare", "--config", str(a), str(b), "--out-dir", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "scenario" in lines[0] and "failures" in lines[0]
    assert len(lines) == 3
    payload = json.loads((out / "compare.json").read_text(encoding="utf-8"))
    assert [row["name"] for row in payload] == ["tiny", "coin"]
    csv_text = (out / "compare.csv").read_text(encoding="utf-8")
    assert csv_text.count("\n") == 3
