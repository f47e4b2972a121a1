"""State inference: Kalman filtering written as free-energy minimization.

With linear dynamics and Gaussian noise the variational posterior that
minimizes free energy is available in closed form and coincides with the
Kalman filter. The update is kept in information (precision) form, which is
the shape the planner's message-passing steps reuse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .gaussian import Gaussian, spd_inverse
from .model import C_OBS, DynamicsModel, ReferenceTrajectory, reference_at
from .sensing import Observation

__all__ = ["Belief", "predict", "update", "infer_step", "initial_belief"]


@dataclass(frozen=True)
class Belief:
    """Posterior over the 4-state at a given step index."""

    g: Gaussian
    step: int

    def __post_init__(self):
        if self.g.dim != 4:
            raise ContractViolation(f"belief must be over the 4-state, got dim {self.g.dim}")


def initial_belief(ref: ReferenceTrajectory) -> Belief:
    """Conservative starting belief: centered on the reference start.

    Position variance 1 m^2, velocity variance 0.1 (m/s)^2 per axis.
    """
    return Belief(
        g=Gaussian(reference_at(ref, 0), np.diag([1.0, 1.0, 0.1, 0.1])),
        step=0,
    )


def predict(prev: Belief, u: np.ndarray, dyn: DynamicsModel) -> Belief:
    """Propagate the belief one step through the dynamics under control u."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != 2:
        raise ContractViolation(f"control must be 2-D, got {u.size}")
    mean = dyn.trans @ prev.g.mean + dyn.ctrl @ u
    cov = dyn.trans @ prev.g.cov @ dyn.trans.T + dyn.noise_cov
    return Belief(g=Gaussian(mean, cov), step=prev.step + 1)


def update(prior: Belief, obs: Observation) -> Belief:
    """Condition the belief on a position observation, information form.

    P = (P_prior^-1 + C^T Sigma^-1 C)^-1,
    m = P (C^T Sigma^-1 y + P_prior^-1 m_prior).
    """
    prior_prec = spd_inverse(prior.g.cov)
    obs_prec = spd_inverse(obs.sigma_hat)
    post_prec = prior_prec + C_OBS.T @ obs_prec @ C_OBS
    post_cov = spd_inverse(post_prec)
    post_mean = post_cov @ (C_OBS.T @ (obs_prec @ obs.y) + prior_prec @ prior.g.mean)
    return Belief(g=Gaussian(post_mean, post_cov), step=prior.step)


def infer_step(prev: Belief, u_prev: np.ndarray, obs: Observation, dyn: DynamicsModel) -> Belief:
    """One filter cycle: predict with the executed control, then condition."""
    return update(predict(prev, u_prev, dyn), obs)
