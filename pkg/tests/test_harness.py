import json
import warnings

import numpy as np
import pytest

from ksbvp import cli
from ksbvp.errors import AccuracyWarning, ConfigurationError
from ksbvp.harness import (
    ExperimentConfig,
    apply_overrides,
    estimate_summary,
    run_experiment,
    verify_estimates,
    write_csv,
)

from conftest import FROZEN_CALIB


def small_verify_config(out_dir, ensemble=2):
    return ExperimentConfig(
        pipeline="verify", n=128, T=0.25, steps=16, ensemble=ensemble,
        out_dir=str(out_dir),
    )


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(pipeline="roots", delta=0.5, n=256)
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again.to_dict() == cfg.to_dict()
    p = tmp_path / "cfg.json"
    p.write_text(cfg.to_json(), encoding="utf-8")
    assert ExperimentConfig.load(p).to_dict() == cfg.to_dict()
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_json("{not json")
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_overrides_follow_dotted_paths():
    cfg = ExperimentConfig()
    out = apply_overrides(cfg, [
        "phi.params.amp=0.05",
        "phi.name=smooth_bump",     # not JSON, falls back to the raw string
        "roots.points=32",
        "weighted=true",
        "n=128",
    ])
    assert out.phi == {"name": "smooth_bump", "params": {"amp": 0.05}}
    assert out.roots["points"] == 32 and isinstance(out.roots["points"], int)
    assert out.weighted is True
    assert out.n == 128
    # the original is untouched
    assert cfg.n == 512 and cfg.weighted is False


def test_override_error_forms():
    cfg = ExperimentConfig()
    with pytest.raises(ConfigurationError):
        apply_overrides(cfg, ["noequals"])
    with pytest.raises(ConfigurationError):
        apply_overrides(cfg, ["=3"])
    with pytest.raises(ConfigurationError):
        apply_overrides(cfg, ["delta.x=1"])  # crosses a scalar


def test_unknown_fields_are_named():
    with pytest.raises(ConfigurationError, match="nope"):
        ExperimentConfig.from_dict({"nope": 1})
    with pytest.raises(ConfigurationError, match="quadrature.panles"):
        ExperimentConfig(quadrature={"panles": 3})
    with pytest.raises(ConfigurationError, match="oracle.mx"):
        ExperimentConfig(oracle={"mx": 3})


def test_validation_rules():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(n=100)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(pipeline="nope")
    with pytest.raises(ConfigurationError):
        ExperimentConfig(ensemble=0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(phi={"params": {}})
    with pytest.raises(ConfigurationError):
        ExperimentConfig(sweep="not a list")
    with pytest.raises(ConfigurationError):
        ExperimentConfig(calibration={"c1": -1.0, "c2": 1.0, "c_energy": 1.0,
                                      "ensemble": 1, "seed": 0})


def test_write_csv_schema_line_and_float_round_trip(tmp_path):
    p = tmp_path / "demo.csv"
    rows = [(1, 1.0 / 3.0, True), (2, 1e-17, False)]
    write_csv(p, "demo", ["k", "value", "flag"], rows)
    lines = p.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# schema=demo.v1"
    assert lines[1] == "k,value,flag"
    k, v, flag = lines[2].split(",")
    assert float(v) == 1.0 / 3.0  # shortest repr survives the round trip
    assert lines[3].split(",")[1:] == [repr(1e-17), "0"]
    assert flag == "1"


def test_verify_run_product_count(tmp_path):
    cfg = small_verify_config(tmp_path, ensemble=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        reports, notes = verify_estimates(cfg)
    names = sorted({r.estimate for r in reports})
    assert len(names) == 4
    for name in names:
        assert sum(1 for r in reports if r.estimate == name) == cfg.ensemble
    assert len(reports) == 4 * cfg.ensemble
    summary = estimate_summary(reports)
    for name in names:
        assert summary[name]["count"] == cfg.ensemble
        assert summary[name]["min"] <= summary[name]["median"] <= summary[name]["max"]


def test_run_experiment_is_deterministic(tmp_path):
    outs = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        cfg = small_verify_config(d)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AccuracyWarning)
            res = run_experiment(cfg)
        assert (d / "verify.csv").exists() and (d / "summary.json").exists()
        outs.append((d / "verify.csv").read_bytes())
        first = (d / "verify.csv").read_text(encoding="utf-8").splitlines()[0]
        assert first == "# schema=verify.v1"
        assert "estimates" in res["summary"] or res["summary"]
    assert outs[0] == outs[1]


def test_empty_sweep(tmp_path):
    cfg = ExperimentConfig(pipeline="sweep", sweep=[], out_dir=str(tmp_path))
    res = run_experiment(cfg)
    assert res["summary"]["entries"] == []


def test_cli_roots_exit_zero(tmp_path, capsys):
    code = cli.main(["roots", "--out", str(tmp_path), "--points", "16"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload
    lines = (tmp_path / "roots.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# schema=roots.v1"


def test_cli_config_errors_exit_two(tmp_path):
    assert cli.main(["solve", "--out", str(tmp_path), "--set", "n=100"]) == 2
    assert cli.main(["solve", "--out", str(tmp_path), "--set", "phi.name=nope",
                     "--set", f"calibration={json.dumps(FROZEN_CALIB)}"]) == 2


def test_cli_divergence_exits_three(tmp_path):
    bad = {"c1": 0.01, "c2": 1e-06, "c_energy": 1.0, "ensemble": 1, "seed": 1}
    code = cli.main([
        "solve", "--out", str(tmp_path),
        "--set", "T=1.0", "--set", "steps=32", "--set", "n=256",
        "--set", "phi.params.amp=2.0", "--set", "phi.params.width=1.0",
        "--set", f"calibration={json.dumps(bad)}",
    ])
    assert code == 3


def test_cli_strict_escalates_accuracy_warnings(tmp_path):
    args = [
        "solve", "--monitor-energy", "--out", str(tmp_path),
        "--set", "T=0.25", "--set", "steps=32", "--set", "n=256",
        "--set", "phi.params.amp=0.01", "--set", "phi.params.width=1.5",
        "--set", f"calibration={json.dumps(FROZEN_CALIB)}",
    ]
    assert cli.main(args + ["--strict"]) == 4   # contour-tail warnings escalate
    assert cli.main(args) == 0                  # same run, advisory only
