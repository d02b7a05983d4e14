import json

import pytest

from beamkam.cli import (EXIT_CONFIG, EXIT_MISSING, EXIT_OK, EXIT_RESONANT, main)
from beamkam.config import ConfigError, load_config, validate
from conftest import linear_raw


def write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


def read_jsonl(path):
    return [json.loads(ln) for ln in path.read_text().splitlines()]


def test_missing_forcing_lists_the_field(tmp_path, capsys):
    code = main(["run", "--config", write(tmp_path, {"m": 1.0}), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "forcing" in capsys.readouterr().err


def test_validation_collects_every_problem():
    raw = linear_raw()
    raw.update(m=-1.0, rho=2.0, b_schedule=[2, 1], bogus=3)
    with pytest.raises(ConfigError) as info:
        validate(raw)
    text = " ".join(info.value.messages)
    assert "bogus" in text
    raw.pop("bogus")
    with pytest.raises(ConfigError) as info:
        validate(raw)
    fields = {m.split(":")[0] for m in info.value.messages}
    assert {"m", "rho", "b_schedule"} <= fields


def test_bad_forcing_row_and_unreadable_file(tmp_path):
    raw = linear_raw()
    raw["forcing"].append({"block": 0, "l": 7, "k": [0], "re": 1.0})
    with pytest.raises(ConfigError, match="l must be"):
        validate(raw)
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.json")


def test_run_writes_artifacts_and_is_deterministic(tmp_path):
    cfg = write(tmp_path, linear_raw())
    for name in ("a", "b"):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / name)]) == EXIT_OK
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "report.jsonl").read_bytes() == (b / "report.jsonl").read_bytes()
    assert (a / "embedding.csv").read_bytes() == (b / "embedding.csv").read_bytes()
    lines = read_jsonl(a / "report.jsonl")
    assert lines[0]["type"] == "header" and lines[0]["config"]["v_max"] == 2
    assert sum(ln["type"] == "step" for ln in lines) == 2
    assert lines[-1]["status"] == "ok"
    assert sorted(p.name for p in (a / "snapshots").iterdir()) == ["state_000.txt", "state_001.txt", "state_002.txt"]


def test_resume_reproduces_report(tmp_path):
    cfg = write(tmp_path, linear_raw())
    main(["run", "--config", cfg, "--out", str(tmp_path / "full")])
    snap = tmp_path / "full" / "snapshots" / "state_001.txt"
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "res"), "--resume", str(snap)]) == EXIT_OK
    assert (tmp_path / "res" / "report.jsonl").read_bytes() == (tmp_path / "full" / "report.jsonl").read_bytes()
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "x"), "--resume", str(tmp_path / "none")]) \
        == EXIT_MISSING


def test_resonant_frequency_exit_code(tmp_path):
    raw = linear_raw()
    raw["omega"] = [1.0]          # equals mu_0 for m = 1
    code = main(["run", "--config", write(tmp_path, raw), "--out", str(tmp_path / "o")])
    assert code == EXIT_RESONANT
    lines = read_jsonl(tmp_path / "o" / "report.jsonl")
    assert lines[-1]["status"] == "resonant"
    assert lines[-1]["error"]["k"] == [-1] and lines[-1]["error"]["l"][0] == 1


def test_sweep_grid_checks_and_zero_forcing(tmp_path):
    raw = linear_raw(v_max=1)
    cfg = write(tmp_path, raw)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s"), "--epsilon-grid", "1e-6,1e-4"]) \
        == EXIT_CONFIG
    zero = dict(raw, forcing=[{"block": 0, "l": 0, "k": [0], "re": 0.0, "im": 0.0}])
    assert main(["sweep", "--config", write(tmp_path, zero, "z.json"), "--out", str(tmp_path / "z")]) == EXIT_OK
    fit = read_jsonl(tmp_path / "z" / "sweep.jsonl")[-1]
    assert fit["q_slope"] is None and fit["note"]


def test_sweep_on_linear_problem_scales_linearly(tmp_path):
    cfg = write(tmp_path, linear_raw(v_max=1))
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "s")]) == EXIT_OK
    lines = read_jsonl(tmp_path / "s" / "sweep.jsonl")
    assert [ln["type"] for ln in lines] == ["header", "point", "point", "point", "fit"]
    assert lines[-1]["q_slope"] == pytest.approx(1.0, abs=1e-3)


def test_measure_writes_csv(tmp_path):
    raw = dict(linear_raw(), samples=200, v_max=1)
    assert main(["measure", "--config", write(tmp_path, raw), "--out", str(tmp_path / "m"), "--seed", "3"]) \
        == EXIT_OK
    csv = (tmp_path / "m" / "measure.csv").read_text().splitlines()
    assert csv[0].startswith("eps,samples,excluded_count") and len(csv) == 4
    assert read_jsonl(tmp_path / "m" / "measure.jsonl")[0]["seed"] == 3


def test_verify_needs_artifacts_then_succeeds(tmp_path, capsys):
    cfg = write(tmp_path, linear_raw())
    out = str(tmp_path / "o")
    assert main(["verify", "--config", cfg, "--out", out]) == EXIT_MISSING
    assert "report.jsonl" in capsys.readouterr().err
    main(["run", "--config", cfg, "--out", out])
    assert main(["verify", "--config", cfg, "--out", out]) == EXIT_OK
    res = read_jsonl(tmp_path / "o" / "verify.jsonl")[1]
    assert res["ratio_to_0_steps"] < 0.1 and res["integration_distance"] < 1e-6
    assert (tmp_path / "o" / "trajectory.csv").exists() and (tmp_path / "o" / "residual.csv").exists()


def test_bounds_command(tmp_path):
    assert main(["bounds", "--out", str(tmp_path / "b")]) == EXIT_OK
    summary = read_jsonl(tmp_path / "b" / "bounds.jsonl")[-1]
    assert summary["failed"] == 0 and summary["passed"] > 100
