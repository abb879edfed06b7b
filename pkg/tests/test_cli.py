import json
from pathlib import Path

import pytest

from samcas import __version__, harness
from samcas.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _cfg(tmp_path, obj, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_run_baseline(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(CONFIGS / "baseline_takeoff.json"),
                 "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verdict"] == "recovered"
    assert summary["version"] == __version__
    eff = json.loads((out / "effective_config.json").read_text())
    assert eff["maneuver"]["params"]["cruise_ias"] == 200.0
    header = (out / "trace.csv").read_text().splitlines()[0]
    assert header.split(",") == list(harness.TRACE_COLUMNS)


def test_crash_is_still_exit_zero_and_summary_reproduces(tmp_path):
    args = ["run", "--config", str(CONFIGS / "sudden_fault.json")]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "summary.json").read_bytes()
    assert a == (tmp_path / "b" / "summary.json").read_bytes()
    assert json.loads(a)["verdict"] == "crashed"


def test_config_error_exit_two_names_field(tmp_path, capsys):
    code = main(["run", "--config", str(CONFIGS / "bad_fault_window.json"),
                 "--out", str(tmp_path)])
    assert code == 2
    assert "faults[0].t_end" in capsys.readouterr().err


def test_override_and_seed_reach_the_effective_config(tmp_path):
    cfg = _cfg(tmp_path, {"duration": 5.0, "maneuver": {"name": "level"}})
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--set", "pilot.tau_sensing=5", "--seed", "42"]) == 0
    eff = json.loads((tmp_path / "o" / "effective_config.json").read_text())
    assert eff["pilot"]["tau_sensing"] == 5 and eff["seed"] == 42


def test_sweep_on_step_fixture(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "_run_point", lambda a: (a[2], a[2] < 6.25, {}))
    cfg = _cfg(tmp_path, {"base": {}, "sweep": {"path": "pilot.tau_sensing", "lo": 0,
                                                 "hi": 10, "tol": 0.01}})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    res = json.loads((tmp_path / "o" / "boundary.json").read_text())
    assert res["boundary"] == pytest.approx(6.25, abs=0.01)
    assert (tmp_path / "o" / "prescan.csv").exists()


def test_sweep_missing_section(tmp_path):
    cfg = _cfg(tmp_path, {"base": {}})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_deadline(tmp_path):
    assert main(["deadline", "--config", str(CONFIGS / "deadline.json"),
                 "--out", str(tmp_path)]) == 0
    v = json.loads((tmp_path / "deadline.json").read_text())
    assert v["which_term"] == "mcas-soft" and v["recoverable"] is False


def test_grid_small(tmp_path):
    cfg = _cfg(tmp_path, {"grid": {"variant": "mcas_new", "reactions": [1.0],
                                   "rps": [0.5, 3.5]}})
    assert main(["grid", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    g = json.loads((tmp_path / "o" / "grid.json").read_text())
    assert len(g["verdicts"]) == 1 and len(g["verdicts"][0]) == 2


def test_compare(tmp_path):
    cfg = _cfg(tmp_path, {"duration": 10.0, "maneuver": {"name": "level"}})
    assert main(["compare", "--config", cfg, "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "compare.json").read_text())
    assert set(res["variants"]) == {"mcas_old", "mcas_new", "sa_mcas"}
    assert set(res["diff_vs_mcas_old"]) == {"mcas_new", "sa_mcas"}


def test_outputs_stay_in_out_dir(tmp_path):
    cfg = _cfg(tmp_path, {"duration": 2.0, "maneuver": {"name": "level"}})
    before = set(tmp_path.iterdir())
    main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
    assert set(tmp_path.iterdir()) - before == {tmp_path / "o"}
