"""Noisy position observations with position- and allocation-dependent accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ckm import AnalyticCkm
from .errors import ContractViolation
from .model import C_OBS

__all__ = ["Observation", "observe"]


@dataclass(frozen=True)
class Observation:
    """A position measurement plus the accuracy the receiver reports for it.

    sigma_hat is the diagonal 2x2 covariance the estimator is told; it equals
    the true sampling covariance when the reporting is calibrated
    (miscalibration = 1).
    """

    y: np.ndarray  # (2,)
    sigma_hat: np.ndarray  # (2, 2) diagonal
    k_used: int


def observe(
    s_true: np.ndarray,
    k: int,
    truth_field: AnalyticCkm,
    rng: np.random.Generator,
    miscalibration: float = 1.0,
    k_set: tuple[int, ...] | None = None,
) -> Observation:
    """Sample y = C s_true + e, e ~ N(0, Sigma_true(position, k)).

    The reported covariance is miscalibration * Sigma_true; pass k_set to have
    the allocation validated against the configured discrete choices.
    """
    s_true = np.asarray(s_true, dtype=float).reshape(-1)
    if s_true.size != 4:
        raise ContractViolation(f"expected a 4-state, got dimension {s_true.size}")
    if k_set is not None and int(k) not in k_set:
        raise ContractViolation(f"allocation k={k} not in configured set {tuple(k_set)}")
    if miscalibration <= 0.0:
        raise ContractViolation(f"miscalibration must be positive, got {miscalibration}")
    pos = C_OBS @ s_true
    var = np.diag(truth_field.variance_at(pos[0], pos[1], int(k)))
    noise = np.sqrt(var) * rng.standard_normal(2)
    return Observation(
        y=pos + noise,
        sigma_hat=np.diag(miscalibration * var),
        k_used=int(k),
    )
