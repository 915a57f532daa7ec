import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from aes_swarm.cli import main
from aes_swarm.export import METRICS_AUX_HEADER, METRICS_HEADER, SNAPSHOT_HEADER, TRAJECTORY_HEADER


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def small_config(tmp_path, **extra):
    lines = {"N": "3*3", "tf": "1", "n_mc": "2", **extra}
    path = tmp_path / "small.cfg"
    path.write_text("".join(f"{k} = {v}\n" for k, v in lines.items()))
    return path


@pytest.fixture(scope="module")
def setup3_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run3")
    assert main(["run", "--setup", "3", "--seed", "42", "--out", str(out)]) == 0
    return out


def test_run_writes_artifacts(setup3_run):
    out = setup3_run
    for name in ("trajectory.csv", "metrics.csv", "metrics_aux.csv", "manifest.json"):
        assert (out / name).is_file()
    metrics = read_csv(out / "metrics.csv")
    assert len(metrics) - 1 == 30 / 0.05 + 1
    assert float(metrics[1][0]) == 0.0 and float(metrics[-1][0]) == 30.0
    assert len(read_csv(out / "trajectory.csv")) - 1 == 601 * 100
    snaps = sorted((out / "snapshots").glob("snapshot_*.csv"))
    assert len(snaps) == 6
    assert {p.name for p in snaps} >= {"snapshot_0_t0.csv", "snapshot_5_t30.csv"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 42 and manifest["config"]["seed"] == 42
    assert manifest["wall_clock_s"] > 0
    assert "snapshots/snapshot_0_t0.csv" in manifest["artifacts"]


def test_golden_headers(setup3_run, tmp_path):
    out = setup3_run
    assert tuple(read_csv(out / "trajectory.csv")[0]) == TRAJECTORY_HEADER == ("t", "id", "x", "y", "theta")
    assert tuple(read_csv(out / "metrics.csv")[0]) == METRICS_HEADER
    assert METRICS_HEADER == ("t", "psi_velocity", "psi_heading", "psi_control", "total_force")
    assert tuple(read_csv(out / "metrics_aux.csv")[0]) == METRICS_AUX_HEADER == ("t", "spring_force", "n_zero_force")
    snap = next((out / "snapshots").glob("*.csv"))
    assert tuple(read_csv(snap)[0]) == SNAPSHOT_HEADER == ("x", "y", "theta")
    opt = tmp_path / "opt"
    assert main(["optimize", "--config", str(small_config(tmp_path)), "--budget", "15", "--out", str(opt)]) == 0
    assert read_csv(opt / "history.csv")[0] == ["iter", "evals", "best_cost", "sigma_1", "sigma_2", "sigma_3", "tabu_count"]


def test_run_repeat_is_byte_identical(setup3_run, tmp_path):
    assert main(["run", "--setup", "3", "--seed", "42", "--out", str(tmp_path)]) == 0
    for name in ("trajectory.csv", "metrics.csv", "metrics_aux.csv", "snapshots/snapshot_3_t18.csv"):
        assert (tmp_path / name).read_bytes() == (setup3_run / name).read_bytes()


def test_manifest_replay_is_byte_identical(setup3_run, tmp_path):
    assert main(["run", "--manifest", str(setup3_run / "manifest.json"), "--out", str(tmp_path)]) == 0
    for name in ("trajectory.csv", "metrics.csv"):
        assert (tmp_path / name).read_bytes() == (setup3_run / name).read_bytes()


def test_setup1_heads_west(tmp_path):
    assert main(["run", "--setup", "1", "--seed", "0", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "trajectory.csv")[1:]
    theta = np.array([float(r[4]) for r in rows if float(r[0]) == 30.0])
    assert theta.size == 100
    mean = np.arctan2(np.sin(theta).mean(), np.cos(theta).mean())
    assert abs(np.angle(np.exp(1j * (mean - np.pi)))) < np.radians(10)


def test_metrics_round_trip(setup3_run, tmp_path):
    code = main(
        ["metrics", "--traj", str(setup3_run / "trajectory.csv"), "--config", str(setup3_run / "manifest.json"),
         "--out", str(tmp_path)]
    )
    assert code == 0
    online = np.array(read_csv(setup3_run / "metrics.csv")[1:], dtype=float)
    offline = np.array(read_csv(tmp_path / "metrics.csv")[1:], dtype=float)
    assert online.shape == offline.shape
    np.testing.assert_allclose(offline, online, rtol=0, atol=1e-9)


def test_metrics_on_stride_sampled_trajectory(tmp_path):
    run = tmp_path / "run"
    assert main(["run", "--setup", "2", "--seed", "3", "--stride", "50", "--out", str(run)]) == 0
    assert main(["metrics", "--traj", str(run / "trajectory.csv"), "--config", str(run / "manifest.json"),
                 "--out", str(tmp_path / "m")]) == 0
    offline = np.array(read_csv(tmp_path / "m" / "metrics.csv")[1:], dtype=float)
    np.testing.assert_allclose(offline[:, 0], np.arange(0, 30.01, 2.5))
    online = np.array(read_csv(run / "metrics.csv")[1:], dtype=float)
    np.testing.assert_allclose(offline, online[::50], rtol=0, atol=1e-9)


def test_metrics_with_key_value_config(tmp_path):
    cfg = small_config(tmp_path)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
    assert main(["metrics", "--traj", str(tmp_path / "r" / "trajectory.csv"), "--config", str(cfg),
                 "--out", str(tmp_path / "m")]) == 0
    assert len(read_csv(tmp_path / "m" / "metrics.csv")) == 22


@pytest.mark.parametrize(
    "content,fragment",
    [
        ("", "empty trajectory"),
        ("t,id,x,y,theta\n", "no rows"),
        ("t,id,x,y\n0,0,1,2\n", ":1:"),
        ("t,id,x,y,theta\n0,0,1,2,0\n0,1,1,oops,0\n", ":3:"),
        ("t,id,x,y,theta\n0,0,1,2,0\n0,2,1,2,0\n", ":3: expected agent id 1"),
        ("t,id,x,y,theta\n0,0,1,2,nan\n", ":2: non-finite"),
    ],
)
def test_metrics_malformed_trajectory(tmp_path, capsys, content, fragment):
    traj = tmp_path / "t.csv"
    traj.write_text(content)
    code = main(["metrics", "--traj", str(traj), "--config", str(small_config(tmp_path)), "--out", str(tmp_path / "o")])
    assert code == 2
    assert fragment in capsys.readouterr().err


def test_metrics_agent_count_mismatch(tmp_path, capsys):
    traj = tmp_path / "t.csv"
    traj.write_text("t,id,x,y,theta\n0,0,0,0,0\n0,1,0.2,0,0\n")
    code = main(["metrics", "--traj", str(traj), "--config", str(small_config(tmp_path)), "--out", str(tmp_path / "o")])
    assert code == 2 and "config expects 9" in capsys.readouterr().err


def test_optimize_outputs(tmp_path, capsys):
    out = tmp_path / "opt"
    code = main(["optimize", "--config", str(small_config(tmp_path)), "--budget", "40", "--seed", "5",
                 "--weights", "align", "--out", str(out)])
    assert code == 0
    history = read_csv(out / "history.csv")[1:]
    assert int(history[-1][1]) <= 40
    best = json.loads((out / "best.json").read_text())
    assert best["evaluations"] <= 40
    assert 0.001 <= best["alpha"] <= 1 and 0.01 <= best["beta"] <= 5 and 0.1 <= best["k"] <= 10
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["weights"] == "align" and manifest["config"]["w2"] == -10.0
    assert manifest["budget"] == 40 and manifest["seed"] == 5
    text = capsys.readouterr().out
    assert "best:" in text and "config parameters:" in text


@pytest.mark.parametrize("preset,w1,w2", [("default", 1 / 9, -1.0), ("force", 10 / 9, -1.0), ("align", 1 / 9, -10.0)])
def test_optimize_weight_presets_recorded(tmp_path, preset, w1, w2):
    out = tmp_path / preset
    assert main(["optimize", "--config", str(small_config(tmp_path)), "--budget", "15", "--weights", preset,
                 "--out", str(out)]) == 0
    cfg = json.loads((out / "manifest.json").read_text())["config"]
    assert cfg["w2"] == w2
    assert cfg["w1"] == pytest.approx(w1)


def test_optimize_degenerate_bounds(tmp_path):
    out = tmp_path / "opt"
    code = main(["optimize", "--config", str(small_config(tmp_path)), "--bounds", "0.066:0.066,0.97:0.97,1.28:1.28",
                 "--out", str(out)])
    assert code == 0
    best = json.loads((out / "best.json").read_text())
    assert (best["alpha"], best["beta"], best["k"], best["evaluations"]) == (0.066, 0.97, 1.28, 1)
    assert best["J"] == best["J_config_params"]
    assert len(read_csv(out / "history.csv")) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--setup", "4"],
        ["run"],
        ["run", "--setup", "1", "--config", "x.cfg"],
        ["run", "--setup", "1", "--seed", "-3"],
        ["run", "--setup", "1", "--stride", "0"],
        ["optimize", "--bounds", "1:0,0:1,0:1"],
        ["optimize", "--bounds", "0:1,0:1"],
        ["optimize", "--budget", "10"],
        ["optimize", "--weights", "speed"],
        ["metrics", "--traj", "t.csv"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_one(argv, tmp_path, capsys):
    try:
        code = main([*argv, "--out", str(tmp_path / "o")] if argv[0] != "frobnicate" else argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1
    assert capsys.readouterr().err


def test_unreadable_config_exits_nonzero(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "o")])
    assert code != 0 and "cannot read config" in capsys.readouterr().err


def test_bad_config_key_exits_nonzero(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("tf = 1\nspeed = 3\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) != 0
    assert "bad.cfg:2: unknown key 'speed'" in capsys.readouterr().err


def test_unwritable_out_dir_exits_nonzero(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--config", str(small_config(tmp_path)), "--out", str(blocker / "sub")]) != 0
    assert "not writable" in capsys.readouterr().err


def test_divergent_run_is_runtime_error(tmp_path, capsys):
    cfg = small_config(tmp_path, tf="30", alpha="1", beta="5", k="10")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "step" in capsys.readouterr().err


def test_console_script_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "aes_swarm.cli", "run", "--config", str(small_config(tmp_path)), "--out",
         str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    assert "run: 20 steps" in res.stdout
    res = subprocess.run([sys.executable, "-m", "aes_swarm.cli", "run", "--setup", "9"], capture_output=True, text=True)
    assert res.returncode == 1
