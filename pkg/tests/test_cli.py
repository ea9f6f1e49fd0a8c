"""Command line: scenario configs, artifacts, exit codes, determinism.

Commands run in-process through main(argv).  Each test builds its own
scenario file under tmp_path, so artifact directories never collide.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from riemplan import parse_manifold
from riemplan.cli import main, read_trajectory_csv, write_trajectory_csv
from riemplan.potentials import ZeroPotential

FLAT = {
    "manifold": "euclidean:2",
    "potential": {"type": "gaussian", "center": [0.5, 0.25], "A": 1.0, "sigma": 0.4},
    "boundary": {
        "q_a": [0.0, 0.0],
        "v_a": [0.3, -0.2],
        "q_b": [1.0, 0.5],
        "v_b": [-0.1, 0.4],
    },
    "interval": [0.0, 1.0],
    "step": 0.0025,
    "verify": {"basis": 24},
    "oracle": {"nodes": 96},
}

# rest state on a potential bump held long enough to lose local optimality
WELL_TOP = {
    "manifold": "euclidean:1",
    "potential": {"type": "gaussian", "center": [0.0], "A": 1.0, "sigma": 1.0},
    "boundary": {"q_a": [0.0], "v_a": [0.0], "q_b": [0.0], "v_b": [0.0]},
    "interval": [0.0, 6.0],
    "step": 0.01,
    "verify": {"basis": 24},
}


def write_cfg(tmp_path, base=FLAT, name="scenario.json", **over):
    cfg = {**base, **over}
    cfg.setdefault("out", str(tmp_path / "out"))
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def test_plan_writes_artifacts(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["plan", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    assert data.shape == (401, 9)
    payload = json.loads((out / "solve.json").read_text())
    assert payload["residual"] < 1e-7
    assert payload["action"] > 0.0
    assert payload["boundary"]["interval"] == [0.0, 1.0]


def test_plan_outputs_are_byte_deterministic(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["plan", "--config", str(cfg), "--out", str(tmp_path / "d1")]) == 0
    assert main(["plan", "--config", str(cfg), "--out", str(tmp_path / "d2")]) == 0
    for name in ("trajectory.csv", "solve.json"):
        b1 = (tmp_path / "d1" / name).read_bytes()
        b2 = (tmp_path / "d2" / name).read_bytes()
        assert b1 == b2


def test_plan_step_override(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["plan", "--config", str(cfg), "--step", "0.005"]) == 0
    data = np.loadtxt(tmp_path / "out" / "trajectory.csv", delimiter=",", skiprows=1)
    assert data.shape[0] == 201


def test_trajectory_csv_round_trip(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["plan", "--config", str(cfg)]) == 0
    chart = parse_manifold("euclidean:2")
    traj = read_trajectory_csv(
        tmp_path / "out" / "trajectory.csv", chart, ZeroPotential(chart)
    )
    back = tmp_path / "back.csv"
    write_trajectory_csv(back, traj)
    assert back.read_bytes() == (tmp_path / "out" / "trajectory.csv").read_bytes()


def test_verify_flat_is_candidate(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["verify", "--config", str(cfg)]) == 0
    payload = json.loads((tmp_path / "out" / "verdict.json").read_text())
    assert payload["classification"] == "candidate"
    assert payload["galerkin"]["verdict"] == "positive_definite"
    assert payload["rank_drops"]["points"] == []
    assert payload["uniqueness"]["pass"] is True


def test_verify_accepts_stored_trajectory(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["plan", "--config", str(cfg)]) == 0
    csv = tmp_path / "out" / "trajectory.csv"
    rc = main(["verify", "--config", str(cfg), "--trajectory", str(csv)])
    assert rc == 0
    payload = json.loads((tmp_path / "out" / "verdict.json").read_text())
    assert payload["classification"] == "candidate"


def test_verify_not_local_exits_4(tmp_path):
    cfg = write_cfg(tmp_path, base=WELL_TOP)
    assert main(["verify", "--config", str(cfg)]) == 4
    payload = json.loads((tmp_path / "out" / "verdict.json").read_text())
    assert payload["classification"] == "not_omega_local"
    assert "uniqueness" not in payload


def test_scan_finds_rank_drop_pair(tmp_path):
    cfg = write_cfg(tmp_path, base=WELL_TOP)
    assert main(["scan", "--config", str(cfg)]) == 0
    payload = json.loads((tmp_path / "out" / "biconjugate.json").read_text())
    assert payload["t1"] == 0.0
    times = [pt["t2"] for pt in payload["points"]]
    assert times and abs(times[0] - 4.7300407) < 5e-3


def test_scan_flat_empty_with_t1_flag(tmp_path):
    cfg = write_cfg(tmp_path, potential=None)
    assert main(["scan", "--config", str(cfg), "--t1", "0.25"]) == 0
    payload = json.loads((tmp_path / "out" / "biconjugate.json").read_text())
    assert payload["t1"] == 0.25
    assert payload["points"] == []


def test_sweep_rows_match_grid(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["sweep", "--config", str(cfg), "--lambdas", "0,0.5,1"]) == 0
    data = np.loadtxt(tmp_path / "out" / "sweep.csv", delimiter=",", skiprows=1)
    assert data.shape == (3, 7)
    assert np.all(np.diff(data[:, 5]) >= 0.0)  # action grows with the obstacle
    assert np.max(data[:, 6]) < 1e-7


def test_single_lambda_sweep_matches_plan(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["sweep", "--config", str(cfg), "--lambdas", "0"]) == 0
    row = np.loadtxt(tmp_path / "out" / "sweep.csv", delimiter=",", skiprows=1)
    zero = write_cfg(tmp_path, name="zero.json", potential=None,
                     out=str(tmp_path / "zero_out"))
    assert main(["plan", "--config", str(zero)]) == 0
    payload = json.loads((tmp_path / "zero_out" / "solve.json").read_text())
    assert abs(row[5] - payload["action"]) < 1e-9
    assert np.max(np.abs(row[1:3] - payload["y"])) < 1e-9


def test_oracle_compare_agreement(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["oracle-compare", "--config", str(cfg)]) == 0
    payload = json.loads((tmp_path / "out" / "compare.json").read_text())
    assert payload["nodes"] == 97
    assert payload["sup_distance"] < 5e-3
    assert payload["action_gap"] < 1e-3 * (1.0 + abs(payload["action_quadrature"]))
    assert payload["grad_sup"] <= 1e-7


def test_unknown_scenario_key_exits_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, typo="oops")
    assert main(["plan", "--config", str(cfg)]) == 1
    assert "unknown scenario keys: typo" in capsys.readouterr().err


def test_bad_json_reports_line_and_column(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "manifold": euclidean:2\n}\n')
    assert main(["plan", "--config", str(p)]) == 1
    err = capsys.readouterr().err
    assert "broken.json:2:15: invalid JSON" in err


def test_missing_trajectory_file_exits_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    rc = main(["verify", "--config", str(cfg), "--trajectory",
               str(tmp_path / "nope.csv")])
    assert rc == 1
    assert "cannot read trajectory" in capsys.readouterr().err


def test_domain_violation_exits_3(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        manifold="sphere2",
        potential=None,
        boundary={"q_a": [0.0, 0.0], "v_a": [0.1, 0.0],
                  "q_b": [6.0, 0.0], "v_b": [0.0, 0.0]},
    )
    assert main(["plan", "--config", str(cfg)]) == 3
    assert "chart domain" in capsys.readouterr().err


def test_solver_failure_exits_2(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        potential={"type": "gaussian", "center": [0.5, 0.25], "A": 3.0,
                   "sigma": 0.25},
        solver={"max_iter": 1},
    )
    assert main(["plan", "--config", str(cfg)]) == 2
    assert capsys.readouterr().err.startswith("error:")
