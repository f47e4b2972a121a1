"""Receding-horizon planning of controls and sensing allocations.

Planning minimizes an expected-free-energy surrogate over a T-step window by
exact Gaussian message passing on the chain of future states:

1. A backward sweep folds the per-step goal priors (desired positions, the
   control effort prior, and the allocation prior moment-matched over the
   discrete allocation set) into a backward belief per future state.
2. A forward sweep then reads off, per step, the Gaussian posterior over the
   control input (its mean is the optimal control) and a softmax posterior
   over the discrete sensing allocation (its argmax is the chosen k).

Only the first step of each plan is executed; the loop replans every step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ckm import AnalyticCkm, GridCkm
from .errors import ContractViolation
from .gaussian import Gaussian, fuse, spd_inverse
from .inference import Belief
from .model import DynamicsModel, GoalPrior, reference_at

__all__ = [
    "PlannerParams",
    "BackwardNode",
    "PlanResult",
    "k_prior_weights",
    "score_softmax",
    "backward_obs_message",
    "backward_pass",
    "forward_control",
    "forward_sensing",
    "plan",
    "efe_report",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class PlannerParams:
    """Knobs of the planning sweep.

    horizon: number of future steps T planned per replan.
    sigma_diffuse2: variance of the uninformative velocity block in each goal
        message (the goal speaks only about positions).
    sigma_terminal2: variance of the uninformative belief the backward sweep
        starts from at the end of the window.
    k_set: the discrete sensing allocations available.
    ckm_eval_point: where the variance map is read during planning, at the
        "desired" reference position (default) or at the "predicted" mean.
    forward_obs_update: whether the forward sweep tightens its belief with the
        precision of the observation it expects from the chosen allocation.
    """

    horizon: int
    k_set: tuple[int, ...]
    sigma_diffuse2: float = 1e8
    sigma_terminal2: float = 1e8
    ckm_eval_point: str = "desired"
    forward_obs_update: bool = True

    def __post_init__(self):
        if self.horizon < 1:
            raise ContractViolation(f"horizon must be >= 1, got {self.horizon}")
        k_set = tuple(int(k) for k in self.k_set)
        if not k_set or any(k <= 0 for k in k_set):
            raise ContractViolation("k_set must be a non-empty tuple of positive counts")
        if tuple(sorted(set(k_set))) != k_set:
            raise ContractViolation("k_set must be strictly increasing")
        if self.sigma_diffuse2 < 1e6 or self.sigma_terminal2 < 1e6:
            raise ContractViolation("diffuse variances must be >= 1e6 to stay uninformative")
        if self.ckm_eval_point not in ("desired", "predicted"):
            raise ContractViolation(f"ckm_eval_point must be 'desired' or 'predicted', got {self.ckm_eval_point!r}")
        object.__setattr__(self, "k_set", k_set)


@dataclass(frozen=True)
class BackwardNode:
    """Backward-sweep quantities at one future step.

    backward: belief over the state from everything later in the window.
    fused: backward belief combined with this step's goal message (None at the
        window's first node, whose goal message belongs to inference, not
        planning).
    """

    backward: Gaussian
    fused: Gaussian | None


@dataclass(frozen=True)
class PlanResult:
    """Output of one planning sweep starting at absolute step t_start.

    u_star[j] / k_star[j] are the control at step t_start+j and the allocation
    for the observation at t_start+j+1. q_u / q_k are the full posteriors the
    optima were read from. forward holds the forward-sweep beliefs (window
    positions 0..T), predicted the pure one-step predictions (positions
    1..T, before any expected-observation tightening). efe is the
    expected-free-energy surrogate of the planned window.
    """

    t_start: int
    u_star: list[np.ndarray]
    k_star: list[int]
    q_u: list[Gaussian]
    q_k: list[np.ndarray]
    backward: list[BackwardNode]
    forward: list[Gaussian]
    predicted: list[Gaussian]
    efe: float


def k_prior_weights(k_set: tuple[int, ...], alpha_goal: float) -> np.ndarray:
    """Normalized prior over allocations, w_k proportional to exp(-alpha k^2 / 2).

    Computed in log domain so extreme alpha values neither overflow nor
    collapse to NaN.
    """
    ks = np.asarray(k_set, dtype=float)
    if ks.size == 0 or np.any(ks <= 0):
        raise ContractViolation("k_set must be non-empty with positive entries")
    if alpha_goal < 0:
        raise ContractViolation(f"alpha_goal must be non-negative, got {alpha_goal}")
    log_w = -0.5 * alpha_goal * ks**2
    return score_softmax(log_w)


def score_softmax(scores: np.ndarray) -> np.ndarray:
    """Normalized exponentials of log scores, max-subtracted for stability."""
    scores = np.asarray(scores, dtype=float)
    shifted = scores - scores.max()
    w = np.exp(shifted)
    return w / w.sum()


def backward_obs_message(
    y_desired: np.ndarray,
    ckm: AnalyticCkm | GridCkm,
    eval_pos: np.ndarray,
    params: PlannerParams,
    goal: GoalPrior,
) -> Gaussian:
    """Goal message a future state receives from its desired observation.

    Marginalizing the desired-position prior over the allocation prior gives a
    Gaussian mixture with common mean; its moment match keeps the mean
    [y_desired, 0, 0] and mixes only covariances: the position block is
    sum_k w_k (Q_goal^-1 + Sigma_ckm(eval_pos, k)) and the velocity block is
    diffuse.
    """
    y_desired = np.asarray(y_desired, dtype=float).reshape(-1)
    eval_pos = np.asarray(eval_pos, dtype=float).reshape(-1)
    if y_desired.size != 2 or eval_pos.size != 2:
        raise ContractViolation("y_desired and eval_pos must be 2-D positions")
    weights = k_prior_weights(params.k_set, goal.alpha_goal)
    profile = ckm.variance_profile(eval_pos[0], eval_pos[1], np.asarray(params.k_set))
    q_inv = spd_inverse(goal.q_goal)
    pos_cov = q_inv + np.diag(weights @ profile)
    cov = np.zeros((4, 4))
    cov[:2, :2] = pos_cov
    cov[2:, 2:] = params.sigma_diffuse2 * np.eye(2)
    mean = np.concatenate([y_desired, np.zeros(2)])
    return Gaussian(mean, cov)


def _eval_positions(
    goal: GoalPrior,
    params: PlannerParams,
    t: int,
    belief: Belief | None,
    dyn: DynamicsModel,
) -> list[np.ndarray]:
    """Field-evaluation positions for window offsets 1..T."""
    horizon = params.horizon
    if params.ckm_eval_point == "desired":
        return [reference_at(goal.reference, t + j)[:2] for j in range(1, horizon + 1)]
    if belief is None:
        raise ContractViolation("'predicted' field evaluation needs the current belief")
    # Zero-control mean rollout; the forward sweep does not exist yet.
    positions = []
    mean = belief.g.mean
    for _ in range(horizon):
        mean = dyn.trans @ mean
        positions.append(mean[:2].copy())
    return positions


def backward_pass(
    goal: GoalPrior,
    ckm: AnalyticCkm | GridCkm,
    dyn: DynamicsModel,
    params: PlannerParams,
    t: int,
    belief: Belief | None = None,
) -> list[BackwardNode]:
    """Sweep goal information backward over the window.

    Node j (absolute step t+j) carries the backward belief and, for j >= 1,
    its fusion with the goal message. The recursion marginalizes the next
    state and its prior-governed control out of the transition:
        S = P_fused(next) + Q + B R^-1 B^T,
        P_bw = (A^T S^-1 A)^-1,  m_bw = P_bw A^T S^-1 m_fused(next).
    """
    horizon = params.horizon
    eval_pos = _eval_positions(goal, params, t, belief, dyn)
    r_inv = spd_inverse(goal.r_goal)
    ctrl_spread = dyn.ctrl @ r_inv @ dyn.ctrl.T

    terminal = Gaussian(np.zeros(4), params.sigma_terminal2 * np.eye(4))
    msg = backward_obs_message(
        reference_at(goal.reference, t + horizon)[:2], ckm, eval_pos[horizon - 1], params, goal
    )
    nodes: list[BackwardNode] = [BackwardNode(backward=terminal, fused=fuse(msg, terminal))]

    for j in range(horizon - 1, -1, -1):
        nxt = nodes[-1].fused
        s_mat = nxt.cov + dyn.noise_cov + ctrl_spread
        s_inv = spd_inverse(s_mat)
        p_bw = spd_inverse(dyn.trans.T @ s_inv @ dyn.trans)
        m_bw = p_bw @ (dyn.trans.T @ (s_inv @ nxt.mean))
        backward = Gaussian(m_bw, p_bw)
        if j >= 1:
            msg = backward_obs_message(
                reference_at(goal.reference, t + j)[:2], ckm, eval_pos[j - 1], params, goal
            )
            nodes.append(BackwardNode(backward=backward, fused=fuse(msg, backward)))
        else:
            nodes.append(BackwardNode(backward=backward, fused=None))
    nodes.reverse()
    return nodes


def forward_control(
    fwd: Gaussian,
    node_next: BackwardNode,
    dyn: DynamicsModel,
    goal: GoalPrior,
) -> tuple[Gaussian, np.ndarray]:
    """Gaussian posterior over this step's control, and its mean as the optimum.

    Combines the forward belief pushed through the dynamics with the fused
    backward belief of the next state:
        D = A P_f A^T + Q + P_fused(next),
        P_u = (B^T D^-1 B + R)^-1,  u* = P_u B^T D^-1 (m_fused(next) - A m_f).
    """
    if node_next.fused is None:
        raise ContractViolation("next backward node carries no fused belief")
    p_pred = dyn.trans @ fwd.cov @ dyn.trans.T + dyn.noise_cov
    d_inv = spd_inverse(p_pred + node_next.fused.cov)
    bt_dinv = dyn.ctrl.T @ d_inv
    p_u = spd_inverse(bt_dinv @ dyn.ctrl + goal.r_goal)
    u_star = p_u @ (bt_dinv @ (node_next.fused.mean - dyn.trans @ fwd.mean))
    q_u = Gaussian(u_star, p_u)
    return q_u, u_star


def forward_sensing(
    fwd: Gaussian,
    u_star: np.ndarray,
    node_next: BackwardNode,
    ckm: AnalyticCkm | GridCkm,
    dyn: DynamicsModel,
    goal: GoalPrior,
    params: PlannerParams,
    y_desired: np.ndarray,
    eval_pos: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Softmax posterior over allocations for the next observation, and its argmax.

    The prediction under the chosen control is fused with the next backward
    belief; each allocation k is scored by how plausibly the desired position
    would be observed through it:
        V_k = Q_goal^-1 + Sigma_ckm(eval_pos, k) + [P_fuse]_pos,
        score(k) = log w_k + log N(m_fuse_pos; y_desired, V_k).
    Ties keep the smallest allocation.
    """
    y_desired = np.asarray(y_desired, dtype=float).reshape(-1)
    eval_pos = np.asarray(eval_pos, dtype=float).reshape(-1)
    u_star = np.asarray(u_star, dtype=float).reshape(-1)

    s_pred = dyn.trans @ fwd.mean + dyn.ctrl @ u_star
    p_pred = dyn.trans @ fwd.cov @ dyn.trans.T + dyn.noise_cov
    pred_prec = spd_inverse(p_pred)
    bw_prec = spd_inverse(node_next.backward.cov)
    p_fuse = spd_inverse(pred_prec + bw_prec)
    m_fuse = p_fuse @ (pred_prec @ s_pred + bw_prec @ node_next.backward.mean)

    base = spd_inverse(goal.q_goal) + p_fuse[:2, :2]
    profile = ckm.variance_profile(eval_pos[0], eval_pos[1], np.asarray(params.k_set))
    # V_k differs from base only on the diagonal; 2x2 determinants in closed form.
    va = base[0, 0] + profile[:, 0]
    vd = base[1, 1] + profile[:, 1]
    vb = base[0, 1]
    det = va * vd - vb * vb
    diff = m_fuse[:2] - y_desired
    quad = (vd * diff[0] ** 2 - 2.0 * vb * diff[0] * diff[1] + va * diff[1] ** 2) / det
    log_like = -_LOG_2PI - 0.5 * np.log(det) - 0.5 * quad
    log_prior = np.log(k_prior_weights(params.k_set, goal.alpha_goal))
    q_k = score_softmax(log_prior + log_like)
    k_star = int(params.k_set[int(np.argmax(q_k))])
    return q_k, k_star


def plan(
    belief: Belief,
    goal: GoalPrior,
    ckm: AnalyticCkm | GridCkm,
    dyn: DynamicsModel,
    params: PlannerParams,
    t: int,
) -> PlanResult:
    """One full planning sweep from the current belief at absolute step t.

    Runs the backward sweep, then walks forward through the window selecting
    the control and allocation per step and propagating the belief under them
    (optionally tightened by the expected observation precision). Returns
    every intermediate quantity plus the window's expected-free-energy
    surrogate.
    """
    nodes = backward_pass(goal, ckm, dyn, params, t, belief)
    eval_pos = _eval_positions(goal, params, t, belief, dyn)

    u_star: list[np.ndarray] = []
    k_star: list[int] = []
    q_u: list[Gaussian] = []
    q_k: list[np.ndarray] = []
    forward: list[Gaussian] = [belief.g]
    predicted: list[Gaussian] = []

    fwd = belief.g
    for j in range(params.horizon):
        node_next = nodes[j + 1]
        y_d = reference_at(goal.reference, t + j + 1)[:2]
        qu_j, u_j = forward_control(fwd, node_next, dyn, goal)
        pred = Gaussian(
            dyn.trans @ fwd.mean + dyn.ctrl @ u_j,
            dyn.trans @ fwd.cov @ dyn.trans.T + dyn.noise_cov,
        )
        pos_j = pred.mean[:2] if params.ckm_eval_point == "predicted" else eval_pos[j]
        qk_j, k_j = forward_sensing(fwd, u_j, node_next, ckm, dyn, goal, params, y_d, pos_j)

        if params.forward_obs_update:
            obs_var = np.diag(ckm.variance_at(pos_j[0], pos_j[1], k_j))
            prec = spd_inverse(pred.cov)
            prec[0, 0] += 1.0 / obs_var[0]
            prec[1, 1] += 1.0 / obs_var[1]
            fwd = Gaussian(pred.mean, spd_inverse(prec))
        else:
            fwd = pred

        u_star.append(u_j)
        k_star.append(k_j)
        q_u.append(qu_j)
        q_k.append(qk_j)
        predicted.append(pred)
        forward.append(fwd)

    result = PlanResult(
        t_start=t,
        u_star=u_star,
        k_star=k_star,
        q_u=q_u,
        q_k=q_k,
        backward=nodes,
        forward=forward,
        predicted=predicted,
        efe=float("nan"),
    )
    return replace(result, efe=efe_report(result, goal, ckm, params))


def efe_report(
    result: PlanResult,
    goal: GoalPrior,
    ckm: AnalyticCkm | GridCkm,
    params: PlannerParams,
) -> float:
    """Expected-free-energy surrogate of a planned window.

    Per step: expected goal-prior energy of the predicted observation, plus
    the control and sensing costs of the selected actions, minus the entropy
    of the predictive observation distribution. Constant normalizers are
    dropped, so only differences and orderings of this number are meaningful.
    """
    total = 0.0
    for j in range(params.horizon):
        pred = result.predicted[j]
        k_j = result.k_star[j]
        u_j = result.u_star[j]
        y_d = reference_at(goal.reference, result.t_start + j + 1)[:2]
        pos = pred.mean[:2] if params.ckm_eval_point == "predicted" else y_d
        sigma_y = ckm.variance_at(pos[0], pos[1], k_j) + pred.cov[:2, :2]
        diff = pred.mean[:2] - y_d
        expected_goal_energy = 0.5 * float(diff @ goal.q_goal @ diff) + 0.5 * float(
            np.trace(goal.q_goal @ sigma_y)
        )
        j_ctrl = 0.5 * float(u_j @ goal.r_goal @ u_j)
        j_sens = 0.5 * goal.alpha_goal * float(k_j) ** 2
        sign, log_det = np.linalg.slogdet(2.0 * np.pi * np.e * sigma_y)
        if sign <= 0:
            raise ContractViolation("predictive observation covariance must be positive definite")
        total += expected_goal_energy + j_ctrl + j_sens - 0.5 * float(log_det)
    return total
