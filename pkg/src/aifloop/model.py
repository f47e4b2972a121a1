"""Mobile-entity motion model, reference trajectory, and stage costs.

The tracked entity is a planar double integrator with state
[l_x, l_y, v_x, v_y]: position is observed, velocity is latent, and the
control input is a 2-D acceleration held constant over each step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

__all__ = [
    "C_OBS",
    "DynamicsModel",
    "ReferenceTrajectory",
    "GoalPrior",
    "make_dynamics",
    "step_truth",
    "reference_at",
    "stage_costs",
]

# Position-extraction map: y = C_OBS @ state picks [l_x, l_y].
C_OBS = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class DynamicsModel:
    """Discrete-time double-integrator: s' = A s + B u + w, w ~ N(0, Q)."""

    trans: np.ndarray  # (4, 4) state transition
    ctrl: np.ndarray   # (4, 2) control input map
    noise_cov: np.ndarray  # (4, 4) process noise covariance
    dt: float


def make_dynamics(dt: float, sigma_w: float) -> DynamicsModel:
    """Build the constant-acceleration model for step length dt.

    Position integrates velocity, velocity integrates the commanded
    acceleration; isotropic process noise with std sigma_w on every component.
    """
    if dt <= 0.0:
        raise ContractViolation(f"dt must be positive, got {dt}")
    if sigma_w < 0.0:
        raise ContractViolation(f"sigma_w must be non-negative, got {sigma_w}")
    eye2 = np.eye(2)
    trans = np.block([[eye2, dt * eye2], [np.zeros((2, 2)), eye2]])
    ctrl = np.vstack([0.5 * dt * dt * eye2, dt * eye2])
    noise_cov = sigma_w**2 * np.eye(4)
    return DynamicsModel(trans=trans, ctrl=ctrl, noise_cov=noise_cov, dt=float(dt))


def step_truth(state: np.ndarray, u: np.ndarray, dyn: DynamicsModel, rng: np.random.Generator) -> np.ndarray:
    """Advance the true state one step, drawing process noise from rng."""
    state = np.asarray(state, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if state.size != 4 or u.size != 2:
        raise ContractViolation(f"expected 4-state and 2-control, got {state.size} and {u.size}")
    nxt = dyn.trans @ state + dyn.ctrl @ u
    if np.trace(dyn.noise_cov) > 0.0:
        chol = np.linalg.cholesky(dyn.noise_cov)
        nxt = nxt + chol @ rng.standard_normal(4)
    return nxt


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Constant-speed straight-line reference from start to end.

    The desired point moves along the segment at `speed` and parks at the end
    once reached (clamped, with zero desired velocity).
    """

    start: np.ndarray  # (2,)
    end: np.ndarray    # (2,)
    speed: float
    dt: float
    n_steps: int

    def __post_init__(self):
        start = np.asarray(self.start, dtype=float).reshape(-1)
        end = np.asarray(self.end, dtype=float).reshape(-1)
        if start.size != 2 or end.size != 2:
            raise ContractViolation("start and end must be 2-D points")
        if self.speed <= 0.0:
            raise ContractViolation(f"speed must be positive, got {self.speed}")
        if self.n_steps < 1:
            raise ContractViolation(f"n_steps must be >= 1, got {self.n_steps}")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)


def reference_at(ref: ReferenceTrajectory, tau: int) -> np.ndarray:
    """Desired 4-state [position, velocity] at step index tau (clamped at the end)."""
    if tau < 0:
        raise ContractViolation(f"step index must be non-negative, got {tau}")
    span = ref.end - ref.start
    length = float(np.linalg.norm(span))
    if length == 0.0:
        return np.concatenate([ref.start, np.zeros(2)])
    direction = span / length
    dist = ref.speed * ref.dt * tau
    if dist >= length:
        return np.concatenate([ref.end, np.zeros(2)])
    return np.concatenate([ref.start + dist * direction, ref.speed * direction])


@dataclass(frozen=True)
class GoalPrior:
    """Quadratic stage-cost weights plus the reference they are measured against.

    q_goal weighs squared position error of the observation, r_goal weighs
    squared control effort, alpha_goal weighs the squared sensing allocation.
    """

    q_goal: np.ndarray  # (2, 2) PSD
    r_goal: np.ndarray  # (2, 2) PSD
    alpha_goal: float
    reference: ReferenceTrajectory

    def __post_init__(self):
        q = np.asarray(self.q_goal, dtype=float)
        r = np.asarray(self.r_goal, dtype=float)
        if q.shape != (2, 2) or r.shape != (2, 2):
            raise ContractViolation("q_goal and r_goal must be 2x2")
        if self.alpha_goal < 0.0:
            raise ContractViolation(f"alpha_goal must be non-negative, got {self.alpha_goal}")
        object.__setattr__(self, "q_goal", 0.5 * (q + q.T))
        object.__setattr__(self, "r_goal", 0.5 * (r + r.T))


def stage_costs(
    y: np.ndarray,
    u: np.ndarray,
    k: float,
    goal: GoalPrior,
    y_desired: np.ndarray,
) -> tuple[float, float, float]:
    """Per-step cost triple (estimation, control, sensing).

    J_est = 0.5 (y - y_d)^T Q (y - y_d), J_ctrl = 0.5 u^T R u,
    J_sens = 0.5 alpha k^2.
    """
    err = np.asarray(y, dtype=float).reshape(-1) - np.asarray(y_desired, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    j_est = 0.5 * float(err @ goal.q_goal @ err)
    j_ctrl = 0.5 * float(u @ goal.r_goal @ u)
    j_sens = 0.5 * goal.alpha_goal * float(k) ** 2
    return j_est, j_ctrl, j_sens
