"""Moment-form Gaussian beliefs and the closed-form operations on them.

Every message-passing step in this package reduces to four operations on
multivariate normals in moment form (mean m, covariance P):

* ``fuse``: precision-weighted product of two densities over the same variable,
* ``push_affine``: exact push-forward through x -> F x + c plus additive noise,
* ``moment_match_mixture``: single-Gaussian projection of a finite mixture,
* ``log_density``: log N(x; m, P).

Covariances are symmetrized on construction and after every product. Inversions
go through a Cholesky factorization; if that fails, a small diagonal
regularizer eps = 1e-9 * (1 + trace/n) is added and the factorization retried
once before giving up. The regularizer exists for near-singular inputs (e.g.
precisions of diffuse priors with variance ~1e8); well-conditioned inputs are
inverted untouched so the algebra stays exact to floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NumericalDegeneracy

__all__ = [
    "Gaussian",
    "fuse",
    "push_affine",
    "moment_match_mixture",
    "log_density",
    "spd_inverse",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class Gaussian:
    """Multivariate normal in moment form.

    Attributes
    ----------
    mean : (n,) ndarray
    cov : (n, n) ndarray, symmetrized on construction
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ContractViolation(
                f"covariance shape {cov.shape} does not match mean dimension {mean.size}"
            )
        cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def _jitter_eps(mat: np.ndarray) -> float:
    # Scale-aware floor: ~1e-9 relative to the mean eigenvalue, never below 1e-9.
    return 1e-9 * (1.0 + float(np.trace(mat)) / mat.shape[0])


def _cholesky_regularized(mat: np.ndarray) -> np.ndarray:
    sym = 0.5 * (mat + mat.T)
    try:
        return np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        pass
    eps = _jitter_eps(sym)
    bumped = sym + eps * np.eye(sym.shape[0])
    try:
        return np.linalg.cholesky(bumped)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracy(
            f"matrix not positive definite even with +{eps:.3e} I regularization"
        ) from exc


def spd_inverse(mat: np.ndarray) -> np.ndarray:
    """Invert a symmetric positive-definite matrix via Cholesky.

    Symmetrizes the input, retries once with a scale-aware diagonal bump if the
    factorization fails, and raises NumericalDegeneracy if it still fails. The
    result is exactly symmetric by construction.
    """
    chol = _cholesky_regularized(mat)
    inv_chol = np.linalg.inv(chol)
    return inv_chol.T @ inv_chol


def fuse(a: Gaussian, b: Gaussian) -> Gaussian:
    """Product of two Gaussian densities over the same variable, renormalized.

    Precision form: P = (Pa^-1 + Pb^-1)^-1, m = P (Pa^-1 ma + Pb^-1 mb).
    Commutative and associative up to floating point.
    """
    if a.dim != b.dim:
        raise ContractViolation(f"dimension mismatch: {a.dim} vs {b.dim}")
    prec_a = spd_inverse(a.cov)
    prec_b = spd_inverse(b.cov)
    cov = spd_inverse(prec_a + prec_b)
    mean = cov @ (prec_a @ a.mean + prec_b @ b.mean)
    return Gaussian(mean, cov)


def push_affine(g: Gaussian, lin: np.ndarray, offset: np.ndarray, noise_cov: np.ndarray) -> Gaussian:
    """Push g through x -> lin @ x + offset with additive N(0, noise_cov) noise.

    Exact for linear-Gaussian models: N(lin m + offset, lin P lin^T + noise_cov).
    """
    lin = np.asarray(lin, dtype=float)
    offset = np.asarray(offset, dtype=float).reshape(-1)
    noise_cov = np.asarray(noise_cov, dtype=float)
    out_dim = offset.size
    if lin.shape != (out_dim, g.dim):
        raise ContractViolation(
            f"map shape {lin.shape} incompatible with input dim {g.dim} and offset dim {out_dim}"
        )
    if noise_cov.shape != (out_dim, out_dim):
        raise ContractViolation(f"noise covariance shape {noise_cov.shape} != ({out_dim}, {out_dim})")
    mean = lin @ g.mean + offset
    cov = lin @ g.cov @ lin.T + noise_cov
    return Gaussian(mean, cov)


def moment_match_mixture(weights: np.ndarray, components: list[Gaussian]) -> Gaussian:
    """Project a finite Gaussian mixture onto a single Gaussian.

    Matches the first two moments: the mean is the weighted mean exactly, the
    covariance is the weighted covariance plus the spread of component means
    (law of total variance).
    """
    weights = np.asarray(weights, dtype=float).reshape(-1)
    if len(components) != weights.size or not components:
        raise ContractViolation("need one weight per component and at least one component")
    if np.any(weights < 0.0):
        raise ContractViolation("mixture weights must be non-negative")
    total = float(weights.sum())
    if abs(total - 1.0) > 1e-6:
        raise ContractViolation(f"mixture weights sum to {total!r}, expected 1")
    weights = weights / total
    dim = components[0].dim
    if any(c.dim != dim for c in components):
        raise ContractViolation("mixture components must share one dimension")
    mean = np.zeros(dim)
    for w, comp in zip(weights, components):
        mean += w * comp.mean
    cov = np.zeros((dim, dim))
    for w, comp in zip(weights, components):
        diff = comp.mean - mean
        cov += w * (comp.cov + np.outer(diff, diff))
    return Gaussian(mean, cov)


def log_density(g: Gaussian, x: np.ndarray) -> float:
    """Evaluate log N(x; g.mean, g.cov)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != g.dim:
        raise ContractViolation(f"point dimension {x.size} != Gaussian dimension {g.dim}")
    chol = _cholesky_regularized(g.cov)
    diff = x - g.mean
    white = np.linalg.solve(chol, diff)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (g.dim * _LOG_2PI + log_det + float(white @ white))
