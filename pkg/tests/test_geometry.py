"""Scattering kinematics: frames, deflections, conservation, alignment."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from boltzgas.geometry import (
    deflection_alpha,
    gamma,
    orthonormal_frame,
    post_collision,
    tanaka_rotation,
)


def random_vectors(rng, n, scale=3.0):
    return scale * rng.standard_normal((n, 3))


class TestOrthonormalFrame:
    def test_unit_x_axis(self):
        frame = orthonormal_frame(np.array([1.0, 0.0, 0.0]))
        assert_allclose(frame.i_axis, [0.0, 0.0, 1.0], atol=0.0)
        assert_allclose(frame.j_axis, [0.0, -1.0, 0.0], atol=0.0)

    def test_orthogonality_and_scaling(self):
        rng = np.random.default_rng(11)
        w = random_vectors(rng, 500)
        frame = orthonormal_frame(w)
        norms = np.linalg.norm(w, axis=1)
        assert_allclose(np.linalg.norm(frame.i_axis, axis=1), norms, rtol=1e-13)
        assert_allclose(np.linalg.norm(frame.j_axis, axis=1), norms, rtol=1e-13)
        assert_allclose(np.sum(frame.i_axis * w, axis=1), 0.0, atol=1e-12)
        assert_allclose(np.sum(frame.j_axis * w, axis=1), 0.0, atol=1e-12)
        assert_allclose(np.sum(frame.i_axis * frame.j_axis, axis=1), 0.0, atol=1e-12)

    def test_right_handedness(self):
        rng = np.random.default_rng(12)
        w = random_vectors(rng, 200)
        frame = orthonormal_frame(w)
        norms = np.linalg.norm(w, axis=1)
        cross = np.cross(w / norms[:, None], frame.i_axis)
        assert_allclose(cross, frame.j_axis, atol=1e-11)

    def test_zero_vector_gives_zero_frame(self):
        frame = orthonormal_frame(np.zeros(3))
        assert_allclose(frame.i_axis, 0.0, atol=0.0)
        assert_allclose(frame.j_axis, 0.0, atol=0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            orthonormal_frame(np.array([np.nan, 0.0, 1.0]))


class TestGamma:
    def test_axis_example(self):
        out = gamma(np.array([0.0, 0.0, 2.0]), 0.0)
        assert_allclose(out, [0.0, 2.0, 0.0], atol=0.0)

    def test_norm_preserved(self):
        rng = np.random.default_rng(21)
        w = random_vectors(rng, 400)
        phi = rng.uniform(0.0, 2.0 * np.pi, 400)
        out = gamma(w, phi)
        assert_allclose(
            np.linalg.norm(out, axis=1), np.linalg.norm(w, axis=1), rtol=1e-12
        )

    def test_orthogonal_to_w(self):
        rng = np.random.default_rng(22)
        w = random_vectors(rng, 400)
        phi = rng.uniform(0.0, 2.0 * np.pi, 400)
        out = gamma(w, phi)
        assert_allclose(np.sum(out * w, axis=1), 0.0, atol=1e-11)

    def test_angular_average_vanishes(self):
        # The discrete mean over an equispaced phi grid of cos and sin is
        # exactly zero, so the average inherits that exactness.
        w = np.array([0.3, -1.2, 2.0])
        phi = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        vals = gamma(np.tile(w, (64, 1)), phi)
        assert_allclose(vals.mean(axis=0), 0.0, atol=1e-14)

    def test_second_angular_moment(self):
        # int_0^2pi Gamma Gamma^T dphi = pi (|w|^2 I - w w^T); the
        # equispaced average of cos^2 and sin^2 is exactly 1/2.
        rng = np.random.default_rng(23)
        for _ in range(10):
            w = 2.0 * rng.standard_normal(3)
            phi = np.linspace(0.0, 2.0 * np.pi, 128, endpoint=False)
            vals = gamma(np.tile(w, (128, 1)), phi)
            second = 2.0 * np.pi * np.einsum("ni,nj->ij", vals, vals) / 128
            expected = np.pi * (np.dot(w, w) * np.eye(3) - np.outer(w, w))
            assert_allclose(second, expected, atol=1e-11 * np.dot(w, w))


class TestDeflection:
    def test_head_on_swaps_velocities(self):
        z = np.array([1.0, -2.0, 0.5])
        v = np.array([-0.3, 0.4, 2.0])
        z_post, v_post = post_collision(z, v, np.pi, 1.234)
        assert_allclose(z_post, v, rtol=0.0, atol=1e-15)
        assert_allclose(v_post, z, rtol=0.0, atol=1e-15)

    def test_conservation_sweep(self):
        rng = np.random.default_rng(31)
        n = 5000
        z = random_vectors(rng, n)
        v = random_vectors(rng, n)
        theta = rng.uniform(1e-6, np.pi, n)
        phi = rng.uniform(0.0, 2.0 * np.pi, n)
        z_post, v_post = post_collision(z, v, theta, phi)
        assert_allclose(z_post + v_post, z + v, rtol=1e-13, atol=1e-13)
        energy_pre = np.sum(z * z, axis=1) + np.sum(v * v, axis=1)
        energy_post = np.sum(z_post * z_post, axis=1) + np.sum(v_post * v_post, axis=1)
        assert_allclose(energy_post, energy_pre, rtol=1e-12)
        rel_pre = np.linalg.norm(v - z, axis=1)
        rel_post = np.linalg.norm(v_post - z_post, axis=1)
        assert_allclose(rel_post, rel_pre, rtol=1e-12)

    def test_deflection_magnitude(self):
        rng = np.random.default_rng(32)
        n = 2000
        z = random_vectors(rng, n)
        v = random_vectors(rng, n)
        theta = rng.uniform(0.0, np.pi, n)
        phi = rng.uniform(0.0, 2.0 * np.pi, n)
        alpha = deflection_alpha(z, v, theta, phi)
        expected = np.linalg.norm(v - z, axis=1) * np.sin(theta / 2.0)
        assert_allclose(np.linalg.norm(alpha, axis=1), expected, rtol=1e-11)

    def test_mean_deflection_over_phi(self):
        # E_phi[alpha] = sin^2(theta/2) (v - z) exactly on equispaced grids.
        z = np.array([0.5, 0.0, -1.0])
        v = np.array([-1.0, 2.0, 0.0])
        theta = 1.1
        phi = np.linspace(0.0, 2.0 * np.pi, 96, endpoint=False)
        alpha = deflection_alpha(
            np.tile(z, (96, 1)), np.tile(v, (96, 1)), theta, phi
        )
        expected = np.sin(theta / 2.0) ** 2 * (v - z)
        assert_allclose(alpha.mean(axis=0), expected, atol=1e-14)

    def test_lipschitz_in_velocities(self):
        # |alpha(z, v) - alpha(z', v')| <= 2 theta (|z - z'| + |v - v'|)
        # once the azimuthal frames are aligned by the matching rotation.
        rng = np.random.default_rng(33)
        n = 3000
        z = random_vectors(rng, n)
        v = random_vectors(rng, n)
        z2 = z + 0.3 * rng.standard_normal((n, 3))
        v2 = v + 0.3 * rng.standard_normal((n, 3))
        theta = rng.uniform(1e-4, np.pi, n)
        phi = rng.uniform(0.0, 2.0 * np.pi, n)
        phi0 = tanaka_rotation(z, v, z2, v2)
        a1 = deflection_alpha(z, v, theta, phi)
        a2 = deflection_alpha(z2, v2, theta, phi + phi0)
        lhs = np.linalg.norm(a1 - a2, axis=1)
        rhs = 2.0 * theta * (
            np.linalg.norm(z - z2, axis=1) + np.linalg.norm(v - v2, axis=1)
        )
        assert np.all(lhs <= rhs + 1e-12)


class TestTanakaRotation:
    def bound_holds(self, w, w2, n_phi=181):
        phi0 = tanaka_rotation(
            np.zeros_like(w), w, np.zeros_like(w2), w2
        )
        phi = np.linspace(0.0, 2.0 * np.pi, n_phi)
        gap = 0.0
        for i in range(len(w)):
            g1 = gamma(np.tile(w[i], (n_phi, 1)), phi)
            g2 = gamma(np.tile(w2[i], (n_phi, 1)), phi + phi0[i])
            dist = np.linalg.norm(g1 - g2, axis=1).max()
            bound = 3.0 * np.linalg.norm(w[i] - w2[i])
            gap = max(gap, dist - bound)
        return gap

    def test_bound_random_pairs(self):
        rng = np.random.default_rng(41)
        w = random_vectors(rng, 60)
        w2 = w + rng.standard_normal((60, 3))
        assert self.bound_holds(w, w2) <= 1e-10

    def test_bound_near_antiparallel(self):
        rng = np.random.default_rng(42)
        w = random_vectors(rng, 40)
        w2 = -w + 1e-3 * rng.standard_normal((40, 3))
        assert self.bound_holds(w, w2) <= 1e-10

    def test_bound_tiny_perturbations(self):
        rng = np.random.default_rng(43)
        w = random_vectors(rng, 40)
        w2 = w + 1e-9 * rng.standard_normal((40, 3))
        assert self.bound_holds(w, w2) <= 1e-10

    def test_identical_vectors_need_no_rotation(self):
        rng = np.random.default_rng(44)
        w = random_vectors(rng, 50)
        phi0 = tanaka_rotation(np.zeros_like(w), w, np.zeros_like(w), w)
        assert_allclose(phi0, 0.0, atol=1e-12)

    def test_degenerate_inputs_return_zero(self):
        z = np.zeros((3, 3))
        v = np.zeros((3, 3))
        phi0 = tanaka_rotation(z, v, z, v)
        assert_allclose(phi0, 0.0, atol=0.0)

    def test_range(self):
        rng = np.random.default_rng(45)
        w = random_vectors(rng, 300)
        w2 = random_vectors(rng, 300)
        phi0 = tanaka_rotation(np.zeros_like(w), w, np.zeros_like(w2), w2)
        assert np.all(phi0 >= 0.0)
        assert np.all(phi0 < 2.0 * np.pi)
