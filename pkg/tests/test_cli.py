import json

import numpy as np

from so3nav.cli import main
from so3nav.operators import save_model
from so3nav.scenario import TrajectoryRecord
from so3nav.sysid import SessionLog

from test_sysid import _make_log, ORACLE_TM


def _write_cfg(tmp_path, name="scenario.json", **over):
    cfg = {
        "n": 2,
        "duration_s": 1.0,
        "k_s": 3.0,
        "seed": 1,
        "reference": {"mode": "fixed", "d_r": [0.0, 0.0, 1.0]},
        "operator": {"kind": "passive_default"},
        "initial": {"bodies": "random_spread", "spread_rad": 0.3},
    }
    cfg.update(over)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_simulate_and_verify(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    rec = TrajectoryRecord.load_csv(out)
    assert rec.n_ticks == 120
    assert main(["verify", "--traj", str(out)]) == 0
    text = capsys.readouterr().out
    assert "z_axis_tracking" in text and "PASS" in text


def test_verify_paired(tmp_path):
    cfg_a = _write_cfg(tmp_path, "a.json", autonomous={"kind": "consensus", "gain": 0.3, "graph": "ring"}, integrator="rkmk4")
    cfg_b = _write_cfg(tmp_path, "b.json", integrator="rkmk4")
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", str(cfg_a), "--out", str(out_a)])
    main(["simulate", "--config", str(cfg_b), "--out", str(out_b)])
    assert main(["verify", "--traj", str(out_a), "--paired", str(out_b)]) == 0


def test_analyze_passivity(tmp_path, capsys):
    from so3nav.operators import passive_reference_model

    model_path = tmp_path / "model.json"
    save_model(passive_reference_model(), model_path)
    out = tmp_path / "report.csv"
    assert main(["analyze-passivity", "--model", str(model_path), "--out", str(out), "--points", "50"]) == 0
    assert out.exists() and out.with_suffix(".json").exists()
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["is_passive"] is True


def test_identify_cli(tmp_path, capsys):
    log = _make_log(trials=12, trial_s=15.0, seed=2)
    session_path = tmp_path / "session.csv"
    log.save_csv(session_path)
    out = tmp_path / "fit.json"
    model_out = tmp_path / "identified.json"
    rc = main(
        [
            "identify",
            "--input", str(session_path),
            "--out", str(out),
            "--model-out", str(model_out),
            "--resample", "10",
            "--restarts", "8",
            "--seed", "0",
        ]
    )
    assert rc == 0
    result = json.loads(out.read_text())
    assert result["converged"] and result["fit_val_aggregate"] > 85.0
    assert model_out.exists()


def test_batch(tmp_path, capsys):
    cfg_dir = tmp_path / "configs"
    cfg_dir.mkdir()
    _write_cfg(cfg_dir, "s1.json", seed=1)
    _write_cfg(cfg_dir, "s2.json", seed=2)
    out_dir = tmp_path / "out"
    assert main(["batch", "--configs", str(cfg_dir), "--out-dir", str(out_dir), "--jobs", "2"]) == 0
    assert (out_dir / "s1.csv").exists() and (out_dir / "s2.csv").exists()
