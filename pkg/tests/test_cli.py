"""Command-line interface: subcommands, exit codes, file outputs."""

import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest
import yaml

from aifloop.ckm import AnalyticCkm, load_grid, sample_field, save_samples_csv
from aifloop.cli import build_parser, main


def _config_doc(n_steps=10, seeds=(0,)):
    return {
        "dynamics": {"dt": 0.1, "sigma_w": 0.01},
        "goal": {"q_goal": [0.5, 0.5], "r_goal": [0.1, 0.1], "alpha_goal": 1e-6},
        "trajectory": {"start": [0.0, 0.0], "end": [10.0, 0.0], "speed": 1.0, "n_steps": n_steps},
        "k_set": [100, 200],
        "ckm": {"truth": {"floor": [0.05, 0.06]}},
        "planner": {"horizon": 2},
        "seeds": list(seeds),
    }


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(_config_doc()))
    return str(path)


def test_run_writes_logs_and_prints_paths(config_file, tmp_path, capsys):
    out = tmp_path / "logs"
    code = main(["run", "--config", config_file, "--out", str(out), "--seeds", "0,1"])
    assert code == 0
    printed = capsys.readouterr().out.splitlines()
    expected = [
        str(out / "episode_aif_seed0.csv"),
        str(out / "episode_aif_seed1.csv"),
        str(out / "summary.csv"),
    ]
    assert printed == expected
    for path in expected:
        assert os.path.exists(path)
    with open(out / "episode_aif_seed0.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 10


def test_run_json_with_overrides(config_file, tmp_path):
    out = tmp_path / "logs"
    code = main(
        ["run", "--config", config_file, "--out", str(out), "--format", "json",
         "--policy", "aif_k_greedy_u", "--horizon", "1"]
    )
    assert code == 0
    with open(out / "episode_aif_k_greedy_u_seed0.json") as fh:
        payload = json.load(fh)
    assert payload["policy"] == "aif_k_greedy_u"
    assert payload["horizon"] == 1


def test_compare_writes_comparison_table(config_file, tmp_path):
    out = tmp_path / "cmp"
    code = main(["compare", "--config", config_file, "--out", str(out)])
    assert code == 0
    with open(out / "comparison.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "policy"
    assert [r[0] for r in rows[1:]] == ["aif", "prior_k_aif_u", "aif_k_greedy_u"]
    col = rows[0].index("total_j")
    for row in rows[1:]:
        assert np.isfinite(float(row[col]))
    for policy in ("aif", "prior_k_aif_u", "aif_k_greedy_u"):
        assert (out / f"episode_{policy}_seed0.csv").exists()


def test_sweep_horizon_outputs(config_file, tmp_path):
    out = tmp_path / "sweep"
    code = main(
        ["sweep-horizon", "--config", config_file, "--out", str(out), "--max-horizon", "2"]
    )
    assert code == 0
    assert (out / "sweep_aif_T1.csv").exists()
    assert (out / "sweep_aif_T2.csv").exists()
    with open(out / "sweep_summary.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["policy", "horizon", "mean_total_j", "std_total_j", "mean_total_j_window", "mean_efe"]
    assert [r[:2] for r in rows[1:]] == [["aif", "1"], ["aif", "2"]]


def test_fit_and_show_ckm_roundtrip(tmp_path, capsys):
    field = AnalyticCkm(floor=(0.2, 0.1), bumps=(), gamma=2.0, k_ref=200)
    rng = np.random.default_rng(0)
    samples = sample_field(field, (0.0, 4.0, 0.0, 2.0), (100, 200), 64, rng, resolution=(4, 2), jitter=0.0)
    samples_path = tmp_path / "samples.csv"
    save_samples_csv(samples, str(samples_path))

    grid_path = tmp_path / "fitted.ckm"
    code = main(
        ["fit-ckm", "--samples", str(samples_path), "--out", str(grid_path),
         "--x-min", "0", "--x-max", "4", "--y-min", "0", "--y-max", "2",
         "--nx", "4", "--ny", "2", "--k", "100,200"]
    )
    assert code == 0
    assert capsys.readouterr().out.strip() == str(grid_path)
    grid = load_grid(str(grid_path))
    np.testing.assert_allclose(np.diag(grid.variance_at(2.0, 1.0, 200)), [0.2, 0.1], rtol=1e-12)
    np.testing.assert_allclose(np.diag(grid.variance_at(2.0, 1.0, 100)), [0.8, 0.4], rtol=1e-12)

    raster_path = tmp_path / "raster.csv"
    code = main(["show-ckm", "--grid", str(grid_path), "--out", str(raster_path)])
    assert code == 0
    with open(raster_path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 * 2 * 2  # cells times allocations
    for row in rows:
        expected = np.diag(field.variance_at(float(row["x"]), float(row["y"]), int(row["k"])))
        assert float(row["var_x"]) == pytest.approx(expected[0], rel=1e-12)
        assert float(row["var_y"]) == pytest.approx(expected[1], rel=1e-12)


# --- failure paths --------------------------------------------------------------


def test_exit_code_2_on_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("dynamics: [unclosed\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err

    doc = _config_doc()
    doc["turbo"] = 1
    unknown = tmp_path / "unknown.yaml"
    unknown.write_text(yaml.safe_dump(doc))
    assert main(["run", "--config", str(unknown), "--out", str(tmp_path / "o")]) == 2

    ok = tmp_path / "ok.yaml"
    ok.write_text(yaml.safe_dump(_config_doc()))
    assert main(["run", "--config", str(ok), "--out", str(tmp_path / "o"), "--seeds", "1,x"]) == 2


def test_exit_code_4_on_missing_files(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path / "o")]) == 4
    assert "i/o error" in capsys.readouterr().err
    assert main(["show-ckm", "--grid", str(tmp_path / "nope.ckm"), "--out", str(tmp_path / "r.csv")]) == 4


def test_exit_code_2_on_malformed_grid(tmp_path):
    bad = tmp_path / "bad.ckm"
    bad.write_text("CKMGRID v9\n")
    assert main(["show-ckm", "--grid", str(bad), "--out", str(tmp_path / "r.csv")]) == 2


def test_argparse_surface():
    parser = build_parser()
    assert parser.prog == "aifloop"
    with pytest.raises(SystemExit):
        parser.parse_args([])  # a subcommand is required
    with pytest.raises(SystemExit):
        parser.parse_args(["run", "--config", "c.yaml", "--out", "o", "--policy", "pid"])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "aifloop", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "run" in proc.stdout and "sweep-horizon" in proc.stdout
