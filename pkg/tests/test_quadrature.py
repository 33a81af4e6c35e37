"""Deterministic integration toolbox: rules, sphere moments, radial forms."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from boltzgas.quadrature import (
    gauss_hermite_3d,
    gauss_legendre,
    radial_gaussian_moment,
    radial_gaussian_moment_adaptive,
    sphere_exp_moments_scaled,
)


class TestGaussLegendre:
    def test_polynomial_exactness(self):
        x, w = gauss_legendre(8, -1.5, 2.5)
        for k in range(16):
            val = np.sum(w * x**k)
            exact = (2.5 ** (k + 1) - (-1.5) ** (k + 1)) / (k + 1)
            assert_allclose(val, exact, rtol=1e-12, atol=1e-14)

    def test_interval_mapping(self):
        x, w = gauss_legendre(5, 2.0, 3.0)
        assert np.all((x > 2.0) & (x < 3.0))
        assert_allclose(w.sum(), 1.0, rtol=1e-14)


class TestGaussHermite3d:
    def test_gaussian_moments(self):
        s = 0.7
        nodes, weights = gauss_hermite_3d(8, s)
        assert_allclose(weights.sum(), 1.0, rtol=1e-13)
        assert_allclose(weights @ nodes, 0.0, atol=1e-13)
        cov = np.einsum("n,ni,nj->ij", weights, nodes, nodes)
        assert_allclose(cov, s * np.eye(3), atol=1e-12)
        # |v|^4 is a degree-4 polynomial, integrated exactly
        m4 = weights @ np.sum(nodes**2, axis=1) ** 2
        assert_allclose(m4, 15.0 * s**2, rtol=1e-12)

    def test_smooth_non_polynomial(self):
        nodes, weights = gauss_hermite_3d(40, 1.0)
        val = weights @ np.cos(nodes[:, 0] + 0.5 * nodes[:, 1])
        # E cos(a X + b Y) = exp(-(a^2 + b^2)/2)
        assert_allclose(val, np.exp(-0.625), rtol=1e-10)


class TestSphereMoments:
    # the adaptive oracle reports roundoff saturation at a = 400, where
    # the scaled moments sit near 1e-175; the comparison still holds
    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    def test_against_adaptive_quadrature(self):
        for a in (0.0, 0.01, 0.4999, 0.5, 3.0, 40.0, 400.0):
            vals = sphere_exp_moments_scaled(np.array([a]), 6)
            for p in range(7):
                exact, _ = quad(
                    lambda mu: mu**p * np.exp(-a * (mu + 1.0)), -1.0, 1.0,
                    epsrel=1e-13, epsabs=1e-300,
                )
                assert_allclose(
                    vals[p][0], exact, rtol=1e-10, atol=1e-280,
                    err_msg=f"a={a}, p={p}",
                )

    def test_zero_argument(self):
        vals = sphere_exp_moments_scaled(np.array([0.0]), 4)
        # m_p(0) = 2/(p+1) for even p, 0 for odd p
        assert_allclose(vals[0][0], 2.0, rtol=1e-14)
        assert_allclose(vals[1][0], 0.0, atol=1e-14)
        assert_allclose(vals[2][0], 2.0 / 3.0, rtol=1e-13)
        assert_allclose(vals[3][0], 0.0, atol=1e-14)
        assert_allclose(vals[4][0], 0.4, rtol=1e-13)

    def test_continuity_at_route_switch(self):
        # the series route hands over to the recursion at a = 0.5
        lo = sphere_exp_moments_scaled(np.array([0.5 - 1e-9]), 5)
        hi = sphere_exp_moments_scaled(np.array([0.5 + 1e-9]), 5)
        assert_allclose(lo[:, 0], hi[:, 0], rtol=1e-7)


class TestRadialGaussianMoment:
    def test_mass_normalisation(self):
        # T_{0,0} integrates the Maxwellian itself
        zn = np.array([0.0, 0.4, 2.0, 9.0])
        vals = radial_gaussian_moment(zn, 0.9, 0, 0)
        assert_allclose(vals, 1.0, rtol=1e-12)

    def test_second_moment_closed_form(self):
        # T_{0,2} = E|z + w|^2 with w centered: |z|^2 + 3 s
        s = 1.3
        zn = np.array([0.0, 0.7, 3.0])
        vals = radial_gaussian_moment(zn, s, 0, 2)
        assert_allclose(vals, zn**2 + 3.0 * s, rtol=1e-12)

    def test_first_directional_moment(self):
        # int (zhat . what) |w| M(z + w) dw relates to E[(z . w)]/|z|;
        # with u = z + w, E[(z . (u - z))] = -|z|^2, so
        # |z| T_{1,1} = -|z|^2 and T_{1,1} = -|z|.
        s = 0.8
        zn = np.array([0.3, 1.0, 4.0])
        vals = radial_gaussian_moment(zn, s, 1, 1)
        assert_allclose(vals, -zn, rtol=1e-11)

    def test_against_adaptive(self):
        s = 0.6
        for p, q in [(0, 0.0), (0, 1.0), (1, 2.0), (2, 3.0), (0, -1.5), (3, 1.0)]:
            for zn in (0.0, 0.25, 1.7, 6.0):
                fast = radial_gaussian_moment(np.array([zn]), s, p, q)[0]
                slow = radial_gaussian_moment_adaptive(zn, s, p, q)
                assert_allclose(
                    fast, slow, rtol=1e-9, err_msg=f"p={p} q={q} zn={zn}"
                )

    def test_monte_carlo_cross_check(self):
        # independent stochastic route for a nontrivial (p, q) pair
        rng = np.random.default_rng(77)
        s = 1.1
        z = np.array([0.0, 0.0, 1.4])
        w = np.sqrt(s) * rng.standard_normal((400000, 3)) - z
        r = np.linalg.norm(w, axis=1)
        mu = w[:, 2] / np.where(r > 0, r, 1.0)
        sample = r**1.5 * mu**2
        mc = sample.mean()
        se = sample.std() / np.sqrt(len(sample))
        exact = radial_gaussian_moment(np.array([1.4]), s, 2, 1.5)[0]
        assert abs(mc - exact) < 4.0 * se

    def test_gamma_like_negative_powers(self):
        # soft-potential exponents down to -1 stay integrable
        vals = radial_gaussian_moment(np.array([0.0, 1.0]), 1.0, 0, -0.999)
        assert np.all(np.isfinite(vals))
        assert np.all(vals > 0.0)
