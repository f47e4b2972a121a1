"""Config loading: strict schema, dotted-path errors, builders."""

from pathlib import Path

import numpy as np
import pytest
import yaml

from aifloop.ckm import AnalyticCkm, GridCkm, save_grid
from aifloop.config import (
    POLICIES,
    ExperimentConfig,
    load_config,
    parse_config,
)
from aifloop.errors import ConfigError

REFERENCE = str(Path(__file__).resolve().parents[1] / "configs" / "reference.yaml")


def _minimal() -> dict:
    return {
        "dynamics": {"dt": 0.1, "sigma_w": 0.01},
        "goal": {"q_goal": [0.5, 0.5], "r_goal": [0.1, 0.1], "alpha_goal": 1e-6},
        "trajectory": {"start": [0.0, 0.0], "end": [10.0, 0.0], "speed": 1.0, "n_steps": 50},
        "k_set": [100, 200],
        "ckm": {"truth": {"floor": [0.05, 0.05]}},
    }


def test_reference_config_loads():
    cfg = load_config(REFERENCE)
    assert cfg.dynamics.dt == 0.1
    assert cfg.dynamics.sigma_w == 0.01
    assert cfg.goal.q_goal == (0.5, 0.5)
    assert cfg.goal.r_goal == (0.1, 0.1)
    assert cfg.goal.alpha_goal == 1e-6
    assert cfg.trajectory.start == (-50.0, 0.0)
    assert cfg.trajectory.end == (50.0, 0.0)
    assert cfg.trajectory.speed == 1.0
    assert cfg.trajectory.n_steps == 1000
    assert cfg.k_set == tuple(range(50, 401, 50))
    assert cfg.ckm.truth.floor == (0.04, 0.04)
    assert len(cfg.ckm.truth.bumps) == 2
    assert cfg.ckm.truth.bumps[0].center == (-20.0, 0.0)
    assert cfg.ckm.truth.gamma == 2.0
    assert cfg.ckm.truth.k_ref == 200
    assert cfg.ckm.planner_grid_file is None
    assert cfg.planner.horizon == 10
    assert cfg.planner.sigma_diffuse2 == 1e8
    assert cfg.planner.forward_obs_update is True
    assert cfg.policy == "aif"
    assert cfg.seeds == tuple(range(10))
    assert cfg.miscalibration == 1.0


def test_defaults_fill_optional_sections():
    cfg = parse_config(_minimal())
    assert cfg.planner.horizon == 10
    assert cfg.planner.sigma_diffuse2 == 1e8
    assert cfg.planner.sigma_terminal2 == 1e8
    assert cfg.planner.ckm_eval_point == "desired"
    assert cfg.planner.forward_obs_update is True
    assert cfg.policy == "aif"
    assert cfg.seeds == (0,)
    assert cfg.miscalibration == 1.0
    assert cfg.ckm.truth.bumps == ()
    assert cfg.ckm.truth.gamma == 2.0
    assert cfg.ckm.truth.k_ref == 200


def test_builders_produce_runtime_objects():
    cfg = parse_config(_minimal())
    dyn = cfg.build_dynamics()
    np.testing.assert_allclose(dyn.trans[0, 2], 0.1)
    ref = cfg.build_reference()
    assert ref.n_steps == 50
    goal = cfg.build_goal()
    np.testing.assert_allclose(goal.q_goal, np.diag([0.5, 0.5]))
    np.testing.assert_allclose(goal.r_goal, np.diag([0.1, 0.1]))
    assert goal.reference.dt == 0.1
    params = cfg.build_planner_params()
    assert params.horizon == 10
    assert params.k_set == (100, 200)
    assert cfg.build_planner_params(horizon=3).horizon == 3
    assert cfg.build_truth_field() is cfg.ckm.truth
    assert cfg.build_planner_field() is cfg.ckm.truth


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda d: d.update(turbo=1), "'turbo'"),
        (lambda d: d["dynamics"].update(drag=0.1), "'dynamics.drag'"),
        (lambda d: d["goal"].update(beta=1.0), "'goal.beta'"),
        (lambda d: d["ckm"]["truth"].update(slope=2), "'ckm.truth.slope'"),
        (lambda d: d["ckm"].update(shadowing=True), "'ckm.shadowing'"),
    ],
)
def test_unknown_keys_report_dotted_path(mutate, fragment):
    doc = _minimal()
    mutate(doc)
    with pytest.raises(ConfigError, match=fragment):
        parse_config(doc)


def test_unknown_bump_key_reports_index():
    doc = _minimal()
    doc["ckm"]["truth"]["bumps"] = [{"center": [0, 0], "amp": [0.1, 0.1], "width": 3.0, "skew": 1}]
    with pytest.raises(ConfigError, match=r"ckm\.truth\.bumps\[0\]\.skew"):
        parse_config(doc)


@pytest.mark.parametrize(
    "drop, fragment",
    [
        ("dynamics", "'dynamics'"),
        ("goal", "'goal'"),
        ("trajectory", "'trajectory'"),
        ("k_set", "'k_set'"),
        ("ckm", "'ckm'"),
    ],
)
def test_missing_sections(drop, fragment):
    doc = _minimal()
    del doc[drop]
    with pytest.raises(ConfigError, match=f"missing required key {fragment}"):
        parse_config(doc)


def test_missing_nested_key():
    doc = _minimal()
    del doc["goal"]["alpha_goal"]
    with pytest.raises(ConfigError, match="'goal.alpha_goal'"):
        parse_config(doc)


def test_type_errors():
    doc = _minimal()
    doc["dynamics"]["dt"] = True
    with pytest.raises(ConfigError, match="expected a number"):
        parse_config(doc)

    doc = _minimal()
    doc["trajectory"]["n_steps"] = 49.5
    with pytest.raises(ConfigError, match="expected an integer"):
        parse_config(doc)

    doc = _minimal()
    doc["planner"] = {"forward_obs_update": 1}
    with pytest.raises(ConfigError, match="expected true/false"):
        parse_config(doc)

    doc = _minimal()
    doc["goal"]["q_goal"] = [0.5]
    with pytest.raises(ConfigError, match="2-element list"):
        parse_config(doc)

    doc = _minimal()
    doc["k_set"] = []
    with pytest.raises(ConfigError, match="non-empty list"):
        parse_config(doc)

    doc = _minimal()
    doc["dynamics"] = [0.1, 0.01]
    with pytest.raises(ConfigError, match="expected a mapping"):
        parse_config(doc)


def test_enum_fields_validated():
    doc = _minimal()
    doc["planner"] = {"ckm_eval_point": "elsewhere"}
    with pytest.raises(ConfigError, match="ckm_eval_point"):
        parse_config(doc)

    doc = _minimal()
    doc["policy"] = "pid"
    with pytest.raises(ConfigError, match="policy"):
        parse_config(doc)
    for policy in POLICIES:
        doc["policy"] = policy
        assert parse_config(doc).policy == policy


def test_grid_file_resolution(tmp_path):
    grid = GridCkm(
        bounds=(0.0, 2.0, 0.0, 2.0),
        resolution=(2, 2),
        k_values=(100, 200),
        log_grids={
            100: np.full((2, 2, 2), np.log(0.2)),
            200: np.full((2, 2, 2), np.log(0.05)),
        },
    )
    save_grid(grid, str(tmp_path / "fitted.ckm"))

    doc = _minimal()
    doc["ckm"]["planner_grid_file"] = "fitted.ckm"
    cfg_path = tmp_path / "exp.yaml"
    cfg_path.write_text(yaml.safe_dump(doc))
    cfg = load_config(str(cfg_path))
    assert cfg.ckm.planner_grid_file == str(tmp_path / "fitted.ckm")
    field = cfg.build_planner_field()
    assert isinstance(field, GridCkm)
    np.testing.assert_allclose(np.diag(field.variance_at(1.0, 1.0, 100)), [0.2, 0.2])
    # The truth field stays analytic regardless.
    assert isinstance(cfg.build_truth_field(), AnalyticCkm)

    # Without a base directory the relative path is kept verbatim, and
    # absolute paths are never rewritten.
    cfg = parse_config(doc)
    assert cfg.ckm.planner_grid_file == "fitted.ckm"
    doc["ckm"]["planner_grid_file"] = str(tmp_path / "fitted.ckm")
    cfg = parse_config(doc, base_dir="/somewhere/else")
    assert cfg.ckm.planner_grid_file == str(tmp_path / "fitted.ckm")

    doc["ckm"]["planner_grid_file"] = 7
    with pytest.raises(ConfigError, match="planner_grid_file"):
        parse_config(doc)


def test_load_config_error_paths(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("dynamics: [unclosed\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(str(bad))

    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    with pytest.raises(ConfigError, match="empty config"):
        load_config(str(empty))

    listy = tmp_path / "list.yaml"
    listy.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="expected a mapping"):
        load_config(str(listy))


def test_config_is_frozen():
    cfg = parse_config(_minimal())
    assert isinstance(cfg, ExperimentConfig)
    with pytest.raises(AttributeError):
        cfg.policy = "other"
