"""Closed-loop active-inference control with adaptive sensing allocation.

A mobile entity is steered along a reference route while the tracker picks,
at every step, both the control input and the discrete sensing resource used
to observe it.  Inference over the latent state and selection of actions are
both carried out with exact Gaussian message passing: filtering sweeps
forward, goal information sweeps backward over a receding horizon, and the
two meet to yield closed-form posteriors over controls and a softmax over
sensing choices.
"""

from .ckm import (
    AnalyticCkm,
    GaussianBump,
    GridCkm,
    VarianceSample,
    fit_grid,
    load_grid,
    load_samples_csv,
    sample_field,
    save_grid,
    save_samples_csv,
)
from .config import (
    ExperimentConfig,
    POLICIES,
    load_config,
    parse_config,
)
from .errors import (
    CkmFormatError,
    ConfigError,
    ContractViolation,
    NumericalDegeneracy,
    UnknownSensingConfig,
)
from .gaussian import Gaussian, fuse, log_density, moment_match_mixture, push_affine
from .harness import (
    Aggregates,
    EpisodeLog,
    StepRecord,
    compare_policies,
    export,
    run_episode,
    run_many,
    summarize,
    summary_means,
    sweep_horizon,
)
from .inference import Belief, infer_step, initial_belief, predict, update
from .model import (
    C_OBS,
    DynamicsModel,
    GoalPrior,
    ReferenceTrajectory,
    make_dynamics,
    reference_at,
    stage_costs,
    step_truth,
)
from .planner import (
    BackwardNode,
    PlanResult,
    PlannerParams,
    backward_obs_message,
    backward_pass,
    efe_report,
    forward_control,
    forward_sensing,
    k_prior_weights,
    plan,
    score_softmax,
)
from .sensing import Observation, observe

__version__ = "0.1.0"

__all__ = [
    "AnalyticCkm",
    "Aggregates",
    "BackwardNode",
    "Belief",
    "C_OBS",
    "CkmFormatError",
    "ConfigError",
    "ContractViolation",
    "DynamicsModel",
    "EpisodeLog",
    "ExperimentConfig",
    "Gaussian",
    "GaussianBump",
    "GoalPrior",
    "GridCkm",
    "NumericalDegeneracy",
    "Observation",
    "POLICIES",
    "PlanResult",
    "PlannerParams",
    "ReferenceTrajectory",
    "StepRecord",
    "UnknownSensingConfig",
    "VarianceSample",
    "backward_obs_message",
    "backward_pass",
    "compare_policies",
    "efe_report",
    "export",
    "fit_grid",
    "forward_control",
    "forward_sensing",
    "fuse",
    "infer_step",
    "initial_belief",
    "k_prior_weights",
    "load_config",
    "load_grid",
    "load_samples_csv",
    "log_density",
    "make_dynamics",
    "moment_match_mixture",
    "observe",
    "parse_config",
    "plan",
    "predict",
    "push_affine",
    "reference_at",
    "run_episode",
    "run_many",
    "sample_field",
    "save_grid",
    "save_samples_csv",
    "score_softmax",
    "stage_costs",
    "step_truth",
    "summarize",
    "summary_means",
    "sweep_horizon",
    "update",
    "__version__",
]
