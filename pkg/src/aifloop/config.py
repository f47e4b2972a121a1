"""Experiment configuration: a strict, hierarchical key/value document.

Configs live in YAML files. Every field below is addressable from the file,
unknown keys are rejected with their full dotted path, and types are checked
on load so a typo fails fast instead of silently running the wrong experiment.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .ckm import AnalyticCkm, GaussianBump, GridCkm, load_grid
from .errors import ConfigError
from .model import DynamicsModel, GoalPrior, ReferenceTrajectory, make_dynamics
from .planner import PlannerParams

__all__ = [
    "POLICIES",
    "DynamicsConfig",
    "GoalConfig",
    "TrajectoryConfig",
    "CkmConfig",
    "PlannerConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
]

POLICIES = ("aif", "prior_k_aif_u", "aif_k_greedy_u")


@dataclass(frozen=True)
class DynamicsConfig:
    dt: float
    sigma_w: float


@dataclass(frozen=True)
class GoalConfig:
    q_goal: tuple[float, float]
    r_goal: tuple[float, float]
    alpha_goal: float


@dataclass(frozen=True)
class TrajectoryConfig:
    start: tuple[float, float]
    end: tuple[float, float]
    speed: float
    n_steps: int


@dataclass(frozen=True)
class CkmConfig:
    """Truth field is always analytic; the planner optionally reads a fitted grid."""

    truth: AnalyticCkm
    planner_grid_file: str | None = None


@dataclass(frozen=True)
class PlannerConfig:
    horizon: int = 10
    sigma_diffuse2: float = 1e8
    sigma_terminal2: float = 1e8
    ckm_eval_point: str = "desired"
    forward_obs_update: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    dynamics: DynamicsConfig
    goal: GoalConfig
    trajectory: TrajectoryConfig
    k_set: tuple[int, ...]
    ckm: CkmConfig
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    policy: str = "aif"
    seeds: tuple[int, ...] = (0,)
    miscalibration: float = 1.0

    # --- builders for the runtime objects -----------------------------------

    def build_dynamics(self) -> DynamicsModel:
        return make_dynamics(self.dynamics.dt, self.dynamics.sigma_w)

    def build_reference(self) -> ReferenceTrajectory:
        t = self.trajectory
        return ReferenceTrajectory(
            start=np.asarray(t.start), end=np.asarray(t.end), speed=t.speed,
            dt=self.dynamics.dt, n_steps=t.n_steps,
        )

    def build_goal(self) -> GoalPrior:
        g = self.goal
        return GoalPrior(
            q_goal=np.diag(g.q_goal), r_goal=np.diag(g.r_goal),
            alpha_goal=g.alpha_goal, reference=self.build_reference(),
        )

    def build_truth_field(self) -> AnalyticCkm:
        return self.ckm.truth

    def build_planner_field(self) -> AnalyticCkm | GridCkm:
        if self.ckm.planner_grid_file is not None:
            return load_grid(self.ckm.planner_grid_file)
        return self.ckm.truth

    def build_planner_params(self, horizon: int | None = None) -> PlannerParams:
        p = self.planner
        return PlannerParams(
            horizon=p.horizon if horizon is None else horizon,
            k_set=self.k_set,
            sigma_diffuse2=p.sigma_diffuse2,
            sigma_terminal2=p.sigma_terminal2,
            ckm_eval_point=p.ckm_eval_point,
            forward_obs_update=p.forward_obs_update,
        )


# --- strict document walking -------------------------------------------------


def _expect_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed: tuple[str, ...], path: str) -> None:
    for key in node:
        if key not in allowed:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown key {where!r} (allowed here: {', '.join(allowed)})")


_MISSING = object()


def _get(node: dict, key: str, path: str, default=_MISSING):
    if key in node:
        return node[key]
    if default is _MISSING:
        where = f"{path}.{key}" if path else key
        raise ConfigError(f"missing required key {where!r}")
    return default


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true/false, got {value!r}")
    return value


def _as_pair(value, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{path}: expected a 2-element list")
    return (_as_float(value[0], path), _as_float(value[1], path))


def _as_int_list(value, path: str) -> tuple[int, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{path}: expected a non-empty list of integers")
    return tuple(_as_int(v, path) for v in value)


def _parse_bumps(value, path: str) -> tuple[GaussianBump, ...]:
    if value is None:
        return ()
    if not isinstance(value, list):
        raise ConfigError(f"{path}: expected a list of bump mappings")
    bumps = []
    for i, raw in enumerate(value):
        sub = f"{path}[{i}]"
        node = _expect_mapping(raw, sub)
        _check_keys(node, ("center", "amp", "width"), sub)
        bumps.append(
            GaussianBump(
                center=_as_pair(_get(node, "center", sub), f"{sub}.center"),
                amp=_as_pair(_get(node, "amp", sub), f"{sub}.amp"),
                width=_as_float(_get(node, "width", sub), f"{sub}.width"),
            )
        )
    return tuple(bumps)


def parse_config(document: dict, source: str = "<config>", base_dir: str | None = None) -> ExperimentConfig:
    """Validate a parsed YAML document and build the ExperimentConfig.

    base_dir resolves a relative planner_grid_file (normally the config file's
    directory).
    """
    root = _expect_mapping(document, source)
    _check_keys(
        root,
        ("dynamics", "goal", "trajectory", "k_set", "ckm", "planner", "policy", "seeds", "miscalibration"),
        "",
    )

    dyn_node = _expect_mapping(_get(root, "dynamics", ""), "dynamics")
    _check_keys(dyn_node, ("dt", "sigma_w"), "dynamics")
    dynamics = DynamicsConfig(
        dt=_as_float(_get(dyn_node, "dt", "dynamics"), "dynamics.dt"),
        sigma_w=_as_float(_get(dyn_node, "sigma_w", "dynamics"), "dynamics.sigma_w"),
    )

    goal_node = _expect_mapping(_get(root, "goal", ""), "goal")
    _check_keys(goal_node, ("q_goal", "r_goal", "alpha_goal"), "goal")
    goal = GoalConfig(
        q_goal=_as_pair(_get(goal_node, "q_goal", "goal"), "goal.q_goal"),
        r_goal=_as_pair(_get(goal_node, "r_goal", "goal"), "goal.r_goal"),
        alpha_goal=_as_float(_get(goal_node, "alpha_goal", "goal"), "goal.alpha_goal"),
    )

    traj_node = _expect_mapping(_get(root, "trajectory", ""), "trajectory")
    _check_keys(traj_node, ("start", "end", "speed", "n_steps"), "trajectory")
    trajectory = TrajectoryConfig(
        start=_as_pair(_get(traj_node, "start", "trajectory"), "trajectory.start"),
        end=_as_pair(_get(traj_node, "end", "trajectory"), "trajectory.end"),
        speed=_as_float(_get(traj_node, "speed", "trajectory"), "trajectory.speed"),
        n_steps=_as_int(_get(traj_node, "n_steps", "trajectory"), "trajectory.n_steps"),
    )

    k_set = _as_int_list(_get(root, "k_set", ""), "k_set")

    ckm_node = _expect_mapping(_get(root, "ckm", ""), "ckm")
    _check_keys(ckm_node, ("truth", "planner_grid_file"), "ckm")
    truth_node = _expect_mapping(_get(ckm_node, "truth", "ckm"), "ckm.truth")
    _check_keys(truth_node, ("floor", "bumps", "gamma", "k_ref"), "ckm.truth")
    truth = AnalyticCkm(
        floor=_as_pair(_get(truth_node, "floor", "ckm.truth"), "ckm.truth.floor"),
        bumps=_parse_bumps(_get(truth_node, "bumps", "ckm.truth", default=None), "ckm.truth.bumps"),
        gamma=_as_float(_get(truth_node, "gamma", "ckm.truth", default=2.0), "ckm.truth.gamma"),
        k_ref=_as_int(_get(truth_node, "k_ref", "ckm.truth", default=200), "ckm.truth.k_ref"),
    )
    grid_file = _get(ckm_node, "planner_grid_file", "ckm", default=None)
    if grid_file is not None:
        if not isinstance(grid_file, str):
            raise ConfigError("ckm.planner_grid_file: expected a path string or null")
        if base_dir is not None and not os.path.isabs(grid_file):
            grid_file = os.path.join(base_dir, grid_file)

    planner_node = _expect_mapping(_get(root, "planner", "", default={}), "planner")
    _check_keys(
        planner_node,
        ("horizon", "sigma_diffuse2", "sigma_terminal2", "ckm_eval_point", "forward_obs_update"),
        "planner",
    )
    defaults = PlannerConfig()
    planner = PlannerConfig(
        horizon=_as_int(_get(planner_node, "horizon", "planner", default=defaults.horizon), "planner.horizon"),
        sigma_diffuse2=_as_float(
            _get(planner_node, "sigma_diffuse2", "planner", default=defaults.sigma_diffuse2),
            "planner.sigma_diffuse2",
        ),
        sigma_terminal2=_as_float(
            _get(planner_node, "sigma_terminal2", "planner", default=defaults.sigma_terminal2),
            "planner.sigma_terminal2",
        ),
        ckm_eval_point=_get(planner_node, "ckm_eval_point", "planner", default=defaults.ckm_eval_point),
        forward_obs_update=_as_bool(
            _get(planner_node, "forward_obs_update", "planner", default=defaults.forward_obs_update),
            "planner.forward_obs_update",
        ),
    )
    if planner.ckm_eval_point not in ("desired", "predicted"):
        raise ConfigError(
            f"planner.ckm_eval_point: expected 'desired' or 'predicted', got {planner.ckm_eval_point!r}"
        )

    policy = _get(root, "policy", "", default="aif")
    if policy not in POLICIES:
        raise ConfigError(f"policy: expected one of {POLICIES}, got {policy!r}")

    seeds = _as_int_list(_get(root, "seeds", "", default=[0]), "seeds")
    miscalibration = _as_float(_get(root, "miscalibration", "", default=1.0), "miscalibration")

    try:
        return ExperimentConfig(
            dynamics=dynamics,
            goal=goal,
            trajectory=trajectory,
            k_set=k_set,
            ckm=CkmConfig(truth=truth, planner_grid_file=grid_file),
            planner=planner,
            policy=policy,
            seeds=seeds,
            miscalibration=miscalibration,
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    """Load and validate a YAML experiment config file."""
    try:
        with open(path) as fh:
            document = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if document is None:
        raise ConfigError(f"{path}: empty config file")
    return parse_config(document, source=path, base_dir=os.path.dirname(os.path.abspath(path)))
