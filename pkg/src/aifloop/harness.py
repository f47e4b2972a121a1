"""Closed-loop simulation: run episodes, compare policies, export logs.

Each episode iterates observe -> infer -> plan -> execute on the scenario a
config describes: observations are drawn from the analytic truth field, the
planner is replanned every step (receding horizon), and only its first-step
control and allocation are executed. Policies differ in which parts of the
plan they keep:

* ``aif``: planned control and planned allocation,
* ``prior_k_aif_u``: planned control, allocation sampled from its prior,
* ``aif_k_greedy_u``: planned allocation, one-step deadbeat control.

Episodes are deterministic given (config, seed); seeds may run in parallel in
worker processes, capped by the AIF_LOOP_THREADS env var (0 or unset = auto).
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .config import POLICIES, ExperimentConfig
from .errors import ConfigError, ContractViolation, NumericalDegeneracy
from .inference import Belief, infer_step, initial_belief, update
from .model import C_OBS, DynamicsModel, reference_at, stage_costs, step_truth
from .planner import k_prior_weights, plan
from .sensing import observe

__all__ = [
    "COST_WINDOW",
    "StepRecord",
    "Aggregates",
    "EpisodeLog",
    "run_episode",
    "run_many",
    "compare_policies",
    "sweep_horizon",
    "policy_prior_k",
    "policy_greedy_u",
    "export",
    "summarize",
    "summary_means",
]

# Length of the short-window cost aggregate (number of planning steps).
COST_WINDOW = 10


@dataclass(frozen=True)
class StepRecord:
    """Everything logged at one closed-loop step.

    u is the control executed this step; k is the allocation chosen this step
    for the NEXT observation (j_sens prices that choice). j_est is measured on
    the executed observation; j_est_belief is the supplementary variant
    measured on the belief mean.
    """

    step: int
    s_true: np.ndarray
    belief_mean: np.ndarray
    belief_cov: np.ndarray
    y: np.ndarray
    sigma_hat: np.ndarray  # (2,) diagonal of the reported covariance
    u: np.ndarray
    k: int
    j_est: float
    j_ctrl: float
    j_sens: float
    efe: float
    j_est_belief: float


@dataclass(frozen=True)
class Aggregates:
    """Episode cost totals.

    total_j follows the planning-cost convention: sum over steps t of
    j_ctrl[t] + j_sens[t] + j_est[t+1], i.e. each control/allocation is paired
    with the observation it produces and the un-planned first observation is
    excluded. total_j_window is the same sum truncated to the first
    COST_WINDOW planning steps. The sum_* fields are plain column sums.
    """

    sum_j_est: float
    sum_j_ctrl: float
    sum_j_sens: float
    sum_j_est_belief: float
    total_j: float
    total_j_window: float
    mean_efe: float


@dataclass(frozen=True)
class EpisodeLog:
    config: ExperimentConfig
    policy: str
    seed: int
    horizon: int
    records: list[StepRecord]
    aggregates: Aggregates


def policy_prior_k(k_set: tuple[int, ...], alpha_goal: float, rng: np.random.Generator) -> int:
    """Sample an allocation from the prior pmf over the discrete set."""
    weights = k_prior_weights(k_set, alpha_goal)
    return int(rng.choice(np.asarray(k_set), p=weights))


def policy_greedy_u(belief: Belief, y_desired_next: np.ndarray, dyn: DynamicsModel) -> np.ndarray:
    """Deadbeat control: place the next predicted position on the target.

    Least-squares solution of C (A m + B u) = y_desired for u; position lands
    on the target in one step at whatever control effort that takes.
    """
    y_desired_next = np.asarray(y_desired_next, dtype=float).reshape(-1)
    lhs = C_OBS @ dyn.ctrl  # (2, 2), 0.5 dt^2 I for the double integrator
    rhs = y_desired_next - C_OBS @ (dyn.trans @ belief.g.mean)
    return np.linalg.solve(lhs, rhs)


def _aggregate(records: list[StepRecord]) -> Aggregates:
    sum_j_est = sum(r.j_est for r in records)
    sum_j_ctrl = sum(r.j_ctrl for r in records)
    sum_j_sens = sum(r.j_sens for r in records)
    sum_j_est_belief = sum(r.j_est_belief for r in records)
    total_j = 0.0
    total_j_window = 0.0
    for t in range(len(records) - 1):
        term = records[t].j_ctrl + records[t].j_sens + records[t + 1].j_est
        total_j += term
        if t < COST_WINDOW:
            total_j_window += term
    mean_efe = sum(r.efe for r in records) / len(records) if records else 0.0
    return Aggregates(
        sum_j_est=sum_j_est,
        sum_j_ctrl=sum_j_ctrl,
        sum_j_sens=sum_j_sens,
        sum_j_est_belief=sum_j_est_belief,
        total_j=total_j,
        total_j_window=total_j_window,
        mean_efe=mean_efe,
    )


def run_episode(
    config: ExperimentConfig,
    seed: int,
    policy: str | None = None,
    horizon: int | None = None,
) -> EpisodeLog:
    """Run one closed-loop episode, deterministic given (config, seed).

    policy and horizon override the config's values (used by comparisons and
    horizon sweeps without rewriting the config).
    """
    policy = config.policy if policy is None else policy
    if policy not in POLICIES:
        raise ContractViolation(f"unknown policy {policy!r}, expected one of {POLICIES}")
    dyn = config.build_dynamics()
    goal = config.build_goal()
    truth_field = config.build_truth_field()
    planner_field = config.build_planner_field()
    params = config.build_planner_params(horizon=horizon)
    ref = goal.reference
    rng = np.random.default_rng(seed)

    # Start exactly on the reference; the belief is deliberately wider.
    s_true = reference_at(ref, 0)
    belief = initial_belief(ref)
    u_prev: np.ndarray | None = None
    k_curr = config.k_set[(len(config.k_set) - 1) // 2]  # lower median of the set

    records: list[StepRecord] = []
    for t in range(config.trajectory.n_steps):
        try:
            obs = observe(s_true, k_curr, truth_field, rng, config.miscalibration, config.k_set)
            if t == 0:
                belief = update(belief, obs)
            else:
                belief = infer_step(belief, u_prev, obs, dyn)

            result = plan(belief, goal, planner_field, dyn, params, t)
            if policy == "aif":
                u_exec = result.u_star[0]
                k_next = result.k_star[0]
            elif policy == "prior_k_aif_u":
                u_exec = result.u_star[0]
                k_next = policy_prior_k(config.k_set, goal.alpha_goal, rng)
            else:  # aif_k_greedy_u
                u_exec = policy_greedy_u(belief, reference_at(ref, t + 1)[:2], dyn)
                k_next = result.k_star[0]

            y_desired = reference_at(ref, t)[:2]
            j_est, j_ctrl, j_sens = stage_costs(obs.y, u_exec, k_next, goal, y_desired)
            j_est_belief, _, _ = stage_costs(belief.g.mean[:2], u_exec, k_next, goal, y_desired)
            records.append(
                StepRecord(
                    step=t,
                    s_true=s_true,
                    belief_mean=belief.g.mean,
                    belief_cov=belief.g.cov,
                    y=obs.y,
                    sigma_hat=np.diag(obs.sigma_hat),
                    u=np.asarray(u_exec, dtype=float),
                    k=int(k_next),
                    j_est=j_est,
                    j_ctrl=j_ctrl,
                    j_sens=j_sens,
                    efe=result.efe,
                    j_est_belief=j_est_belief,
                )
            )
            s_true = step_truth(s_true, u_exec, dyn, rng)
            u_prev = u_exec
            k_curr = k_next
        except (ContractViolation, NumericalDegeneracy) as exc:
            raise type(exc)(f"episode seed={seed} aborted at step {t}: {exc}") from exc

    return EpisodeLog(
        config=config,
        policy=policy,
        seed=seed,
        horizon=params.horizon,
        records=records,
        aggregates=_aggregate(records),
    )


def _worker_count(n_tasks: int) -> int:
    raw = os.environ.get("AIF_LOOP_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"AIF_LOOP_THREADS must be an integer, got {raw!r}") from exc
    if cap < 0:
        raise ConfigError(f"AIF_LOOP_THREADS must be >= 0, got {cap}")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def _episode_task(args) -> EpisodeLog:
    config, seed, policy, horizon = args
    return run_episode(config, seed, policy=policy, horizon=horizon)


def run_many(
    config: ExperimentConfig,
    seeds: tuple[int, ...] | None = None,
    policy: str | None = None,
    horizon: int | None = None,
) -> list[EpisodeLog]:
    """Run one episode per seed, in parallel workers when allowed.

    Results come back in seed order regardless of worker scheduling, so
    downstream exports stay deterministic.
    """
    seeds = config.seeds if seeds is None else tuple(seeds)
    tasks = [(config, seed, policy, horizon) for seed in seeds]
    workers = _worker_count(len(tasks))
    if workers <= 1:
        return [_episode_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_episode_task, tasks))


def compare_policies(
    config: ExperimentConfig, seeds: tuple[int, ...] | None = None
) -> dict[str, list[EpisodeLog]]:
    """Run every policy over the same seed list."""
    return {policy: run_many(config, seeds=seeds, policy=policy) for policy in POLICIES}


def sweep_horizon(
    config: ExperimentConfig,
    horizons: tuple[int, ...],
    policies: tuple[str, ...] = ("aif",),
    seeds: tuple[int, ...] | None = None,
) -> dict[tuple[str, int], list[EpisodeLog]]:
    """Run each policy at each planning horizon over the seed list."""
    out: dict[tuple[str, int], list[EpisodeLog]] = {}
    for policy in policies:
        if policy not in POLICIES:
            raise ContractViolation(f"unknown policy {policy!r}")
        for horizon in horizons:
            out[(policy, horizon)] = run_many(config, seeds=seeds, policy=policy, horizon=horizon)
    return out


# --- exports ------------------------------------------------------------------


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


_CSV_COLUMNS = (
    ["step"]
    + [f"true_{c}" for c in ("lx", "ly", "vx", "vy")]
    + [f"bel_{c}" for c in ("lx", "ly", "vx", "vy")]
    + [f"bel_P{i}{j}" for i in range(4) for j in range(4)]
    + ["y_x", "y_y", "sigma_hat_x", "sigma_hat_y", "u_x", "u_y", "k"]
    + ["j_est", "j_ctrl", "j_sens", "efe", "j_est_belief"]
)


def _record_row(r: StepRecord) -> str:
    vals = (
        [str(r.step)]
        + [_fmt(v) for v in r.s_true]
        + [_fmt(v) for v in r.belief_mean]
        + [_fmt(v) for v in r.belief_cov.reshape(-1)]
        + [_fmt(r.y[0]), _fmt(r.y[1]), _fmt(r.sigma_hat[0]), _fmt(r.sigma_hat[1])]
        + [_fmt(r.u[0]), _fmt(r.u[1]), str(r.k)]
        + [_fmt(r.j_est), _fmt(r.j_ctrl), _fmt(r.j_sens), _fmt(r.efe), _fmt(r.j_est_belief)]
    )
    return ",".join(vals)


def _record_dict(r: StepRecord) -> dict:
    return {
        "step": r.step,
        "s_true": list(r.s_true),
        "belief_mean": list(r.belief_mean),
        "belief_cov": [list(row) for row in r.belief_cov],
        "y": list(r.y),
        "sigma_hat": list(r.sigma_hat),
        "u": list(r.u),
        "k": r.k,
        "j_est": r.j_est,
        "j_ctrl": r.j_ctrl,
        "j_sens": r.j_sens,
        "efe": r.efe,
        "j_est_belief": r.j_est_belief,
    }


_SUMMARY_FIELDS = (
    "sum_j_est",
    "sum_j_ctrl",
    "sum_j_sens",
    "sum_j_est_belief",
    "total_j",
    "total_j_window",
    "mean_efe",
)


def summarize(log: EpisodeLog) -> dict:
    """Flat per-episode summary row."""
    row = {"policy": log.policy, "seed": log.seed, "horizon": log.horizon}
    for name in _SUMMARY_FIELDS:
        row[name] = getattr(log.aggregates, name)
    return row


def summary_means(logs: list[EpisodeLog]) -> dict:
    """Mean of every aggregate over a list of episodes."""
    if not logs:
        raise ContractViolation("cannot summarize zero episodes")
    out = {}
    for name in _SUMMARY_FIELDS:
        out[name] = sum(getattr(log.aggregates, name) for log in logs) / len(logs)
    return out


def _episode_filename(log: EpisodeLog, fmt: str) -> str:
    return f"episode_{log.policy}_seed{log.seed}.{fmt}"


def _write_text(path_or_stream, text: str) -> None:
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        with open(path_or_stream, "w") as fh:
            fh.write(text)


def _episode_csv(log: EpisodeLog) -> str:
    lines = [",".join(_CSV_COLUMNS)]
    lines.extend(_record_row(r) for r in log.records)
    return "\n".join(lines) + "\n"


def _episode_json(log: EpisodeLog) -> str:
    payload = {
        "config": asdict(log.config),
        "policy": log.policy,
        "seed": log.seed,
        "horizon": log.horizon,
        "records": [_record_dict(r) for r in log.records],
        "aggregates": asdict(log.aggregates),
    }
    return json.dumps(payload, indent=2) + "\n"


def _summary_csv(logs: list[EpisodeLog]) -> str:
    header = ["policy", "seed", "horizon"] + list(_SUMMARY_FIELDS)
    lines = [",".join(header)]
    for log in logs:
        row = summarize(log)
        lines.append(
            ",".join(
                [row["policy"], str(row["seed"]), str(row["horizon"])]
                + [_fmt(row[name]) for name in _SUMMARY_FIELDS]
            )
        )
    means = summary_means(logs)
    lines.append(
        ",".join(["mean", "-", "-"] + [_fmt(means[name]) for name in _SUMMARY_FIELDS])
    )
    return "\n".join(lines) + "\n"


def _summary_json(logs: list[EpisodeLog]) -> str:
    payload = {
        "episodes": [summarize(log) for log in logs],
        "mean": summary_means(logs),
    }
    return json.dumps(payload, indent=2) + "\n"


def export(log_or_logs, fmt: str, sink) -> list[str]:
    """Write episode logs to CSV or JSON.

    A single EpisodeLog goes to `sink` as one file (path or stream). A list
    goes into the directory `sink`: one file per episode plus summary.<fmt>
    with per-seed totals and their means. Returns the paths written (empty
    for stream sinks).
    """
    if fmt not in ("csv", "json"):
        raise ContractViolation(f"format must be 'csv' or 'json', got {fmt!r}")
    if isinstance(log_or_logs, EpisodeLog):
        text = _episode_csv(log_or_logs) if fmt == "csv" else _episode_json(log_or_logs)
        _write_text(sink, text)
        return [sink] if isinstance(sink, (str, os.PathLike)) else []
    logs = list(log_or_logs)
    if not logs:
        raise ContractViolation("cannot export zero episodes")
    os.makedirs(sink, exist_ok=True)
    written = []
    for log in logs:
        path = os.path.join(sink, _episode_filename(log, fmt))
        _write_text(path, _episode_csv(log) if fmt == "csv" else _episode_json(log))
        written.append(path)
    summary_path = os.path.join(sink, f"summary.{fmt}")
    _write_text(summary_path, _summary_csv(logs) if fmt == "csv" else _summary_json(logs))
    written.append(summary_path)
    return written
