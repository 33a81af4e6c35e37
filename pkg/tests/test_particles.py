"""Tests for the interacting particle ensemble."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from boltzgas import kernels, particles
from boltzgas.densities import MollifiedEmpiricalModel
from boltzgas.rng import stream


FLAT = kernels.KernelSpec(gamma=0.0, c=8.0, angular=kernels.HARD_SPHERE)
LINEAR = kernels.KernelSpec(gamma=1.0, c=4.0, angular=kernels.HARD_SPHERE)


def small_ensemble(seed=1, n=40, mode=particles.ONE_SIDED, **kw):
    return particles.maxwellian_ensemble(n, stream(seed, 0), mode=mode, **kw)


class TestEnsembleValidation:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match=r"\(N, 3\)"):
            particles.ParticleEnsemble(
                positions=np.zeros((4, 3)),
                velocities=np.zeros((5, 3)),
                h_x=0.1,
                h_v=0.1,
            )

    def test_single_particle_rejected(self):
        with pytest.raises(ValueError, match="two particles"):
            particles.ParticleEnsemble(
                positions=np.zeros((1, 3)),
                velocities=np.zeros((1, 3)),
                h_x=0.1,
                h_v=0.1,
            )

    def test_degenerate_bandwidth_rejected(self):
        for h_x, h_v in [(0.0, 0.1), (0.1, -1.0)]:
            with pytest.raises(ValueError, match="bandwidths"):
                particles.ParticleEnsemble(
                    positions=np.zeros((3, 3)),
                    velocities=np.zeros((3, 3)),
                    h_x=h_x,
                    h_v=h_v,
                )

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            particles.ParticleEnsemble(
                positions=np.zeros((3, 3)),
                velocities=np.zeros((3, 3)),
                h_x=0.1,
                h_v=0.1,
                mode="pairwise",
            )

    def test_positions_wrapped_into_box(self):
        ens = particles.ParticleEnsemble(
            positions=[[1.3, -0.2, 0.5], [0.1, 0.9, 2.0]],
            velocities=np.zeros((2, 3)),
            h_x=0.1,
            h_v=0.1,
            side=1.0,
        )
        assert np.all((ens.positions >= 0.0) & (ens.positions < 1.0))

    def test_copy_is_independent(self):
        ens = small_ensemble()
        dup = ens.copy()
        dup.velocities[0, 0] += 1.0
        assert ens.velocities[0, 0] != dup.velocities[0, 0]

    def test_momentum_and_energy(self):
        ens = particles.ParticleEnsemble(
            positions=np.zeros((2, 3)),
            velocities=[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]],
            h_x=0.1,
            h_v=0.1,
        )
        assert_allclose(ens.momentum(), [1.0, 2.0, 0.0])
        assert ens.energy() == 5.0


class TestDefaultBandwidths:
    def test_scaling_exponent(self):
        hx1, hv1 = particles.default_bandwidths(100)
        hx2, hv2 = particles.default_bandwidths(100 * 2**7)
        assert_allclose(hx1 / hx2, 2.0, rtol=1e-12)
        assert_allclose(hv1 / hv2, 2.0, rtol=1e-12)

    def test_dimension_scales(self):
        hx, hv = particles.default_bandwidths(128, side=2.0, vel_var=4.0)
        assert_allclose(hx, 2.0 * 0.25 * 0.5)
        assert_allclose(hv, 2.0 * 0.5)

    def test_too_few_particles(self):
        with pytest.raises(ValueError, match="two particles"):
            particles.default_bandwidths(1)


class TestSymmetricConservation:
    def test_momentum_and_energy_invariant(self):
        rng = stream(11, 0)
        ens = particles.maxwellian_ensemble(
            60, rng, mode=particles.SYMMETRIC_PAIR
        )
        p0 = ens.momentum()
        e0 = ens.energy()
        out = ens
        moved = False
        for _ in range(30):
            out = particles.step_ensemble(out, LINEAR, 0.05, rng)
            assert np.abs(out.momentum() - p0).max() < 1e-12 * max(1.0, e0)
            assert abs(out.energy() - e0) < 1e-12 * e0
            moved = moved or not np.array_equal(
                out.velocities, ens.velocities
            )
        assert moved, "no collision fired in 30 steps"

    def test_long_run_roundoff_stays_small(self):
        rng = stream(12, 0)
        ens = particles.maxwellian_ensemble(
            20, rng, mode=particles.SYMMETRIC_PAIR
        )
        e0 = ens.energy()
        out = ens
        for _ in range(400):
            out = particles.step_ensemble(out, FLAT, 0.02, rng)
        assert abs(out.energy() - e0) / e0 < 1e-9


class TestOneSidedEnergyRate:
    def test_finite_difference_matches_formula(self):
        rng = stream(4, 0)
        n = 200
        ens = particles.ParticleEnsemble(
            positions=rng.uniform(0.0, 1.0, (n, 3)),
            velocities=rng.normal(0.0, 0.05, (n, 3)),
            h_x=0.1,
            h_v=0.3,
            side=1.0,
            mode=particles.ONE_SIDED,
        )
        predicted = particles.ensemble_energy_rate(ens, FLAT)
        dt = 0.01
        reps = 150
        diffs = np.empty(reps)
        for i in range(reps):
            out = particles.step_ensemble(ens, FLAT, dt, stream(50, i))
            diffs[i] = (out.energy() - ens.energy()) / dt
        se = diffs.std(ddof=1) / math.sqrt(reps)
        assert abs(diffs.mean() - predicted) < 3.0 * se

    def test_symmetric_mode_rate_vanishes(self):
        ens = small_ensemble(seed=3, n=50, mode=particles.SYMMETRIC_PAIR)
        rate = particles.ensemble_energy_rate(ens, FLAT)
        scale = ens.energy() * (2.0 * math.pi * 8.0)
        assert abs(rate) < 1e-12 * scale

    def test_requires_flat_cross_section(self):
        ens = small_ensemble(seed=3, n=10)
        with pytest.raises(ValueError, match="gamma = 0"):
            particles.ensemble_energy_rate(ens, LINEAR)

    def test_matched_temperature_near_stationary(self):
        # with a small velocity bandwidth the mollification bias is
        # tiny and a thermalized ensemble holds its energy in the mean
        ens = particles.maxwellian_ensemble(
            100, stream(2, 0), h_v=0.05, mode=particles.ONE_SIDED
        )
        predicted = particles.ensemble_energy_rate(ens, FLAT)
        horizon = 0.1
        reps = 60
        drifts = np.empty(reps)
        for i in range(reps):
            out = particles.step_ensemble(ens, FLAT, horizon, stream(90, i))
            drifts[i] = out.energy() - ens.energy()
        se = drifts.std(ddof=1) / math.sqrt(reps)
        assert abs(drifts.mean() - predicted * horizon) < 3.0 * se
        # and the drift itself is a tiny fraction of the total energy
        assert abs(drifts.mean()) < 0.02 * ens.energy()


class TestStepMechanics:
    def test_zero_dt_is_identity(self):
        ens = small_ensemble()
        out = particles.step_ensemble(ens, FLAT, 0.0, stream(1, 1))
        assert np.array_equal(out.positions, ens.positions)
        assert np.array_equal(out.velocities, ens.velocities)
        assert out.time == ens.time

    def test_negative_dt_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            particles.step_ensemble(small_ensemble(), FLAT, -0.1, stream(1, 1))

    def test_soft_potential_rejected(self):
        soft = kernels.KernelSpec(
            gamma=-0.5, c=1.0, angular=kernels.HARD_SPHERE
        )
        with pytest.raises(ValueError, match="soft"):
            particles.step_ensemble(small_ensemble(), soft, 0.1, stream(1, 1))

    def test_free_streaming_between_collisions(self):
        # a near-total angular cutoff suppresses every collision, so the
        # step is pure transport with periodic wrapping
        quiet = kernels.KernelSpec(
            gamma=1.0,
            c=1.0,
            angular=kernels.HARD_SPHERE,
            epsilon=math.pi - 1e-9,
        )
        ens = particles.ParticleEnsemble(
            positions=[[0.9, 0.5, 0.5], [0.1, 0.5, 0.5]],
            velocities=[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
            h_x=0.1,
            h_v=0.1,
            side=1.0,
        )
        out = particles.step_ensemble(ens, quiet, 0.3, stream(5, 0))
        assert_allclose(out.positions[0], [0.2, 0.5, 0.5], atol=1e-12)
        assert np.array_equal(out.velocities, ens.velocities)

    def test_deterministic_given_stream(self):
        ens = small_ensemble(seed=6, n=60)
        a = particles.step_ensemble(ens, FLAT, 0.2, stream(9, 0))
        b = particles.step_ensemble(ens, FLAT, 0.2, stream(9, 0))
        assert np.array_equal(a.velocities, b.velocities)
        assert np.array_equal(a.positions, b.positions)
        c = particles.step_ensemble(ens, FLAT, 0.2, stream(9, 1))
        assert not np.array_equal(a.velocities, c.velocities)

    def test_time_advances_by_dt(self):
        ens = small_ensemble()
        out = particles.step_ensemble(ens, FLAT, 0.37, stream(2, 2))
        assert_allclose(out.time, 0.37, rtol=0, atol=1e-12)

    def test_fractional_gamma_steps_run(self):
        spec = kernels.KernelSpec(
            gamma=0.4, c=1.0, angular=kernels.POWER_LAW, nu=0.5, epsilon=0.05
        )
        out = particles.step_ensemble(
            small_ensemble(seed=7, n=30), spec, 0.2, stream(7, 1)
        )
        assert out.time > 0.0


class TestEvolveEnsemble:
    def test_snapshots_at_marks(self):
        ens = small_ensemble(seed=8, n=30)
        final, snaps = particles.evolve_ensemble(
            ens, FLAT, 0.5, 0.1, stream(8, 1), snapshot_times=[0.2, 0.4]
        )
        assert [t for t, _ in snaps] == [0.2, 0.4]
        assert_allclose(final.time, 0.5)
        for t, snap in snaps:
            assert_allclose(snap.time, t)

    def test_horizon_before_current_time_rejected(self):
        ens = small_ensemble()
        ens.time = 1.0
        with pytest.raises(ValueError, match="horizon"):
            particles.evolve_ensemble(ens, FLAT, 0.5, 0.1, stream(1, 1))

    def test_no_snapshots_returns_final_only(self):
        ens = small_ensemble(seed=9, n=20)
        final, snaps = particles.evolve_ensemble(
            ens, FLAT, 0.3, 0.1, stream(9, 9)
        )
        assert snaps == []
        assert_allclose(final.time, 0.3)


class TestEmpiricalBridge:
    def test_snapshot_becomes_density_model(self):
        ens = small_ensemble(seed=10, n=300)
        model = ens.to_empirical_model()
        assert isinstance(model, MollifiedEmpiricalModel)
        assert model.box_side == ens.side
        x = np.array([[0.5, 0.5, 0.5]])
        v = np.array([[0.0, 0.0, 0.0]])
        assert model.evaluate(0.0, x, v)[0] > 0.0

    def test_wide_bandwidth_rejected_by_bridge(self):
        ens = small_ensemble(seed=10, n=20, h_x=0.3)
        with pytest.raises(ValueError, match="width"):
            ens.to_empirical_model()
