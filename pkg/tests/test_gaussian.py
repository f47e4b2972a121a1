"""Gaussian algebra against straight linear-algebra recomputation and sampling."""

import numpy as np
import pytest

from aifloop.errors import ContractViolation, NumericalDegeneracy
from aifloop.gaussian import (
    Gaussian,
    fuse,
    log_density,
    moment_match_mixture,
    push_affine,
    spd_inverse,
)


def random_spd(rng, dim, scale=1.0):
    a = rng.standard_normal((dim, dim))
    return scale * (a @ a.T + dim * np.eye(dim))


def test_gaussian_symmetrizes_and_validates():
    g = Gaussian(np.zeros(2), np.array([[1.0, 0.3], [0.1, 1.0]]))
    assert np.array_equal(g.cov, g.cov.T)
    assert g.cov[0, 1] == pytest.approx(0.2)
    assert g.dim == 2
    with pytest.raises(ContractViolation):
        Gaussian(np.zeros(3), np.eye(2))


def test_spd_inverse_matches_numpy_and_is_symmetric():
    rng = np.random.default_rng(0)
    for _ in range(200):
        dim = int(rng.integers(1, 6))
        mat = random_spd(rng, dim)
        inv = spd_inverse(mat)
        assert np.array_equal(inv, inv.T)
        np.testing.assert_allclose(inv, np.linalg.inv(mat), rtol=1e-10, atol=1e-12)


def test_spd_inverse_leaves_well_conditioned_input_unjittered():
    # Inverting twice must return the original to float precision: a silent
    # diagonal bump on healthy matrices would show up here.
    mat = np.diag([2.0, 0.5, 1.0, 4.0])
    back = spd_inverse(spd_inverse(mat))
    np.testing.assert_allclose(back, mat, rtol=1e-13, atol=0.0)


def test_spd_inverse_rejects_indefinite():
    with pytest.raises(NumericalDegeneracy):
        spd_inverse(np.diag([1.0, -1.0]))


def test_fuse_matches_precision_algebra():
    rng = np.random.default_rng(1)
    for _ in range(200):
        dim = int(rng.integers(1, 5))
        a = Gaussian(rng.standard_normal(dim), random_spd(rng, dim))
        b = Gaussian(rng.standard_normal(dim), random_spd(rng, dim))
        f = fuse(a, b)
        pa, pb = np.linalg.inv(a.cov), np.linalg.inv(b.cov)
        cov = np.linalg.inv(pa + pb)
        mean = cov @ (pa @ a.mean + pb @ b.mean)
        np.testing.assert_allclose(f.cov, cov, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(f.mean, mean, rtol=1e-9, atol=1e-12)


def test_fuse_commutes_and_diffuse_is_identity():
    rng = np.random.default_rng(2)
    a = Gaussian(rng.standard_normal(3), random_spd(rng, 3))
    b = Gaussian(rng.standard_normal(3), random_spd(rng, 3))
    ab, ba = fuse(a, b), fuse(b, a)
    np.testing.assert_allclose(ab.mean, ba.mean, rtol=1e-12)
    np.testing.assert_allclose(ab.cov, ba.cov, rtol=1e-12)

    diffuse = Gaussian(np.zeros(3), 1e12 * np.eye(3))
    near = fuse(a, diffuse)
    np.testing.assert_allclose(near.mean, a.mean, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(near.cov, a.cov, rtol=1e-9, atol=1e-9)

    with pytest.raises(ContractViolation):
        fuse(a, Gaussian(np.zeros(2), np.eye(2)))


def test_push_affine_formula_and_shape_checks():
    rng = np.random.default_rng(3)
    for _ in range(100):
        g = Gaussian(rng.standard_normal(4), random_spd(rng, 4))
        lin = rng.standard_normal((2, 4))
        offset = rng.standard_normal(2)
        noise = random_spd(rng, 2, scale=0.5)
        out = push_affine(g, lin, offset, noise)
        np.testing.assert_allclose(out.mean, lin @ g.mean + offset, rtol=1e-12)
        np.testing.assert_allclose(out.cov, lin @ g.cov @ lin.T + noise, rtol=1e-12)
    with pytest.raises(ContractViolation):
        push_affine(g, np.eye(3), np.zeros(2), np.eye(2))
    with pytest.raises(ContractViolation):
        push_affine(g, rng.standard_normal((2, 4)), np.zeros(2), np.eye(3))


def test_moment_match_mixture_against_sampled_moments():
    # Law of total variance, checked the expensive way: draw from the mixture
    # and compare empirical moments.
    rng = np.random.default_rng(4)
    weights = np.array([0.2, 0.5, 0.3])
    comps = [
        Gaussian(np.array([1.0, -2.0]), np.diag([0.5, 1.5])),
        Gaussian(np.array([-1.0, 0.5]), np.array([[1.0, 0.4], [0.4, 0.8]])),
        Gaussian(np.array([3.0, 1.0]), np.diag([2.0, 0.2])),
    ]
    matched = moment_match_mixture(weights, comps)

    n = 400_000
    picks = rng.choice(3, size=n, p=weights)
    draws = np.empty((n, 2))
    for i, comp in enumerate(comps):
        mask = picks == i
        chol = np.linalg.cholesky(comp.cov)
        draws[mask] = comp.mean + rng.standard_normal((int(mask.sum()), 2)) @ chol.T
    np.testing.assert_allclose(matched.mean, draws.mean(axis=0), atol=0.02)
    np.testing.assert_allclose(matched.cov, np.cov(draws.T), atol=0.03)


def test_moment_match_mixture_common_mean_averages_covariances():
    # With one shared mean there is no spread term: the matched covariance is
    # the plain weighted average.
    mean = np.array([0.7, -0.1])
    covs = [np.diag([1.0, 2.0]), np.diag([3.0, 0.5])]
    weights = np.array([0.25, 0.75])
    matched = moment_match_mixture(weights, [Gaussian(mean, c) for c in covs])
    np.testing.assert_allclose(matched.mean, mean, rtol=1e-14)
    np.testing.assert_allclose(matched.cov, 0.25 * covs[0] + 0.75 * covs[1], rtol=1e-14)


def test_moment_match_mixture_single_component_is_identity():
    g = Gaussian(np.array([1.0, 2.0]), np.diag([0.3, 0.9]))
    matched = moment_match_mixture(np.array([1.0]), [g])
    np.testing.assert_allclose(matched.mean, g.mean)
    np.testing.assert_allclose(matched.cov, g.cov)


def test_moment_match_mixture_validates_weights():
    g = Gaussian(np.zeros(2), np.eye(2))
    with pytest.raises(ContractViolation):
        moment_match_mixture(np.array([0.5, 0.4]), [g, g])  # sums to 0.9
    with pytest.raises(ContractViolation):
        moment_match_mixture(np.array([1.5, -0.5]), [g, g])  # negative weight
    with pytest.raises(ContractViolation):
        moment_match_mixture(np.array([1.0]), [])


def test_log_density_against_direct_formula():
    rng = np.random.default_rng(5)
    for _ in range(100):
        dim = int(rng.integers(1, 5))
        g = Gaussian(rng.standard_normal(dim), random_spd(rng, dim))
        x = rng.standard_normal(dim)
        diff = x - g.mean
        expect = -0.5 * (
            dim * np.log(2 * np.pi)
            + np.linalg.slogdet(g.cov)[1]
            + diff @ np.linalg.inv(g.cov) @ diff
        )
        assert log_density(g, x) == pytest.approx(expect, rel=1e-10)
    with pytest.raises(ContractViolation):
        log_density(g, np.zeros(dim + 1))


def test_log_density_normalizes_in_1d():
    # Numerically integrate exp(log N) over a wide 1-D range.
    g = Gaussian(np.array([0.3]), np.array([[0.7]]))
    xs = np.linspace(-10, 10, 20001)
    vals = np.array([np.exp(log_density(g, np.array([x]))) for x in xs])
    assert np.trapezoid(vals, xs) == pytest.approx(1.0, abs=1e-8)
