"""Exact simulation of the velocity-jump transport process.

The simulated object is a tagged particle with position ``X_t`` moving
in straight lines between collisions and velocity ``Z_t`` jumping by the
scattering transfer against a prescribed background density ``f``.  The
generator acting on a test function ``psi(x, z)`` is

    (Z_t . grad_x) psi
    + int [psi(x, z + alpha_j(z, v, theta, phi)) - psi(x, z)]
          f(t, x, v) sigma(|project_j(z) - v|) dv Q(dtheta) dphi,

so the total jump intensity at state ``(t, x, z)`` equals
``2 pi |Q| int sigma_j(z, v) f(t, x, v) dv``.

Simulation is by acceptance-rejection against a state-independent
dominating process, which keeps the scheme exact:

* the conditional density is bounded, ``f(t, x | v) <= F``;
* the truncated cross section obeys ``sigma_j(z, v) <= c W(v)`` with a
  weight ``W`` depending only on the candidate velocity:
  ``W = 1`` for ``gamma = 0``, ``W = j + |v|`` for ``gamma = 1`` and
  ``W = 1 + j + |v|`` for intermediate ``gamma`` (both bounds use
  ``|project_j(z)| <= j``);
* candidate velocities are drawn from the weighted marginal
  ``W(v) m(t, v) / E[W]``, so the residual acceptance ratio
  ``sigma_j f(t, x | v) / (c W(v) F)`` never exceeds one.

Every candidate evaluates that ratio and raises if it exceeds one,
turning any bound violation into a hard failure instead of a silently
wrong law.  Soft potentials (``gamma < 0``) admit no finite envelope of
this form and are rejected.

The truncation level can escalate: whenever a jump carries ``|Z|``
beyond the current level the level grows by a fixed step and the
candidate schedule is regenerated from the current time (a stopping
time, so the restarted exponential clock is still exact).  Since the
projection is the identity on ``|z| <= level``, the escalating process
realizes the untruncated dynamics; with escalation off the process is
the genuinely truncated one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import angular_mass, sample_theta, sigma
from .rng import stream
from .truncation import alpha_j, project_j

__all__ = [
    "SimConfig",
    "CandidateRecord",
    "EventLog",
    "Trajectory",
    "EnvelopeError",
    "majorant_rate",
    "simulate",
    "simulate_ensemble",
]


class EnvelopeError(RuntimeError):
    """A dominating bound failed at a concrete candidate."""


@dataclass(frozen=True)
class SimConfig:
    """Run parameters for a single-particle simulation.

    Parameters
    ----------
    horizon : float
        Final time ``T > 0``.
    level : float
        Initial truncation level ``j >= 1``.
    level_step : float
        Increment applied when escalation triggers.
    escalate : bool
        Grow the level whenever ``|Z|`` exceeds it (untruncated
        dynamics); with ``False`` the level stays fixed.
    collisions : bool
        With ``False`` the particle free-streams (no jump schedule at
        all), which gives the exactly solvable transport benchmark.
    max_events : int
        Guard on the total number of candidates per trajectory.
    """

    horizon: float
    level: float = 4.0
    level_step: float = 4.0
    escalate: bool = True
    collisions: bool = True
    max_events: int = 1_000_000

    def __post_init__(self):
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ValueError("horizon must be positive and finite")
        if self.level < 1.0:
            raise ValueError("truncation level must be >= 1")
        if self.level_step <= 0.0:
            raise ValueError("level step must be positive")
        if self.max_events < 1:
            raise ValueError("max_events must be positive")


@dataclass
class CandidateRecord:
    """One fully drawn candidate of the dominating process."""

    time: float
    velocity: np.ndarray
    theta: float
    phi: float
    r: float
    bound: float
    accepted: bool
    level: float


@dataclass
class EventLog:
    """Candidate bookkeeping for one trajectory.

    The counters are always maintained; ``records`` holds the full
    per-candidate draws only when the run was asked to keep them.
    """

    records: list[CandidateRecord] = field(default_factory=list)
    n_candidates: int = 0
    n_accepted: int = 0
    n_skipped: int = 0


@dataclass
class Trajectory:
    """Piecewise-linear path with right-continuous velocity.

    ``times[k]`` is where segment ``k`` starts (``times[0] = 0``),
    ``positions[k]`` the position there, ``velocities[k]`` the constant
    velocity on ``[times[k], times[k+1])`` (the last segment extends to
    the horizon) and ``levels[k]`` the truncation level in force.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    levels: np.ndarray
    horizon: float

    def _segment(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any((t < 0.0) | (t > self.horizon)):
            raise ValueError("query time outside [0, horizon]")
        return np.minimum(
            np.searchsorted(self.times, t, side="right") - 1, len(self.times) - 1
        )

    def position(self, t):
        """Position at time(s) ``t``, vectorized."""
        k = self._segment(t)
        t = np.asarray(t, dtype=np.float64)
        dt = (t - self.times[k])[..., np.newaxis]
        return self.positions[k] + dt * self.velocities[k]

    def velocity(self, t):
        """Velocity at time(s) ``t`` (right-continuous at jumps)."""
        return self.velocities[self._segment(t)]

    @property
    def jump_times(self):
        return self.times[1:]

    @property
    def n_jumps(self):
        return len(self.times) - 1

    def max_speed(self):
        """Largest speed attained over the whole path."""
        return float(np.linalg.norm(self.velocities, axis=1).max())


def _weight_scalars(gamma, level, mean_speed):
    """Mean of the envelope weight under the marginal.

    Returns ``E[W(v)]`` for ``W = 1``, ``level + |v|`` or
    ``1 + level + |v|`` according to ``gamma``.
    """
    if gamma == 0.0:
        return 1.0
    if gamma == 1.0:
        return level + mean_speed
    return 1.0 + level + mean_speed


def _weight_values(gamma, level, speeds):
    if gamma == 0.0:
        return np.ones_like(speeds)
    if gamma == 1.0:
        return level + speeds
    return 1.0 + level + speeds


def majorant_rate(model, kernel, level, horizon):
    """Constant candidate rate dominating the jump intensity up to ``horizon``.

    Equals ``2 pi |Q| c F sup_t E[W(v)]`` with the mean speed bounded
    through ``E|v| <= sqrt(E|v|^2)``.  Raises for soft potentials, which
    this envelope cannot dominate.
    """
    if kernel.gamma < 0.0:
        raise ValueError(
            "no finite state-independent envelope exists for gamma < 0"
        )
    f_sup = model.conditional_sup(horizon)
    speed_bound = math.sqrt(model.speed_sq_bound(horizon))
    w_bar = _weight_scalars(kernel.gamma, level, speed_bound)
    return 2.0 * math.pi * angular_mass(kernel) * kernel.c * f_sup * w_bar


def _draw_candidate_velocity(model, kernel, level, t, rng):
    """One draw from the weighted marginal ``W(v) m(t, v) / E[W]``."""
    gamma = kernel.gamma
    if gamma == 0.0:
        return model.sample_velocity(t, rng, 1)[0]
    base = level if gamma == 1.0 else 1.0 + level
    mean_speed = model.mean_speed(t)
    if rng.random() * (base + mean_speed) < base:
        return model.sample_velocity(t, rng, 1)[0]
    return model.sample_speed_tilted(t, rng, 1)[0]


def simulate(model, kernel, config, rng, x0=None, z0=None, log_events=True):
    """Run one trajectory of the jump process.

    Parameters
    ----------
    model : densities.DensityModel
        Background density driving the collisions.
    kernel : kernels.KernelSpec
    config : SimConfig
    rng : numpy.random.Generator
        Source of all randomness for this trajectory.
    x0, z0 : array_like (3,), optional
        Initial state; defaults are drawn from the model at time zero.
    log_events : bool
        Keep per-candidate records (switch off for large ensembles).

    Returns
    -------
    (Trajectory, EventLog)
    """
    if x0 is None or z0 is None:
        xs, zs = model.sample_state(0.0, rng, 1)
        x0 = xs[0] if x0 is None else np.asarray(x0, dtype=np.float64)
        z0 = zs[0] if z0 is None else np.asarray(z0, dtype=np.float64)
    else:
        x0 = np.asarray(x0, dtype=np.float64)
        z0 = np.asarray(z0, dtype=np.float64)
    if x0.shape != (3,) or z0.shape != (3,):
        raise ValueError("initial state must be a pair of 3-vectors")

    horizon = config.horizon
    level = config.level
    if config.escalate:
        while np.linalg.norm(z0) > level:
            level += config.level_step

    times = [0.0]
    positions = [x0.copy()]
    velocities = [z0.copy()]
    levels = [level]
    log = EventLog()

    if not config.collisions:
        traj = Trajectory(
            np.array(times),
            np.array(positions),
            np.array(velocities),
            np.array(levels, dtype=np.float64),
            horizon,
        )
        return traj, log

    f_sup = model.conditional_sup(horizon)
    speed_bound = math.sqrt(model.speed_sq_bound(horizon))
    w_bar = _weight_scalars(kernel.gamma, level, speed_bound)
    rate = majorant_rate(model, kernel, level, horizon)
    if rate == 0.0:
        # an angular cutoff at pi leaves a zero-mass measure: no jumps
        traj = Trajectory(
            np.array(times),
            np.array(positions),
            np.array(velocities),
            np.array(levels, dtype=np.float64),
            horizon,
        )
        return traj, log

    t = 0.0
    x = x0.copy()
    z = z0.copy()
    while True:
        t = t + rng.exponential(1.0 / rate)
        if t >= horizon:
            break
        if log.n_candidates + log.n_skipped >= config.max_events:
            raise RuntimeError(
                f"candidate count exceeded max_events={config.max_events}"
            )

        # Null-thin the constant-rate clock down to the time-varying
        # dominating rate 2 pi |Q| c F E[W](t).  The ratio depends only
        # on time, never on the particle state, so the remaining points
        # still form the wanted inhomogeneous Poisson process.
        w_mean = _weight_scalars(kernel.gamma, level, model.mean_speed(t))
        keep = w_mean / w_bar
        if keep > 1.0 + 1e-9:
            raise EnvelopeError(
                f"mean envelope weight {w_mean} exceeds its horizon bound {w_bar}"
            )
        if rng.random() >= keep:
            log.n_skipped += 1
            continue
        log.n_candidates += 1

        v = _draw_candidate_velocity(model, kernel, level, t, rng)
        theta = sample_theta(kernel, rng.random())
        phi = rng.uniform(0.0, 2.0 * math.pi)

        x_now = x + (t - times[-1]) * z
        w_val = _weight_values(
            kernel.gamma, level, np.linalg.norm(v)
        )
        bound = kernel.c * w_val * f_sup
        rel_speed = np.linalg.norm(project_j(z, level) - v)
        intensity = sigma(kernel, rel_speed) * model.conditional(
            t, x_now[np.newaxis], v[np.newaxis]
        )[0]
        if intensity > bound * (1.0 + 1e-9):
            raise EnvelopeError(
                f"jump intensity {intensity} exceeds envelope {bound} "
                f"at t={t}, level={level}"
            )
        r = rng.random() * bound
        accepted = r < intensity
        if accepted:
            log.n_accepted += 1

        if log_events:
            log.records.append(
                CandidateRecord(
                    time=t,
                    velocity=v.copy(),
                    theta=float(theta),
                    phi=float(phi),
                    r=float(r),
                    bound=float(bound),
                    accepted=bool(accepted),
                    level=level,
                )
            )
        if not accepted:
            continue

        z = z + alpha_j(z, v, theta, phi, level)
        x = x_now
        times.append(t)
        positions.append(x.copy())
        velocities.append(z.copy())

        if config.escalate and np.linalg.norm(z) > level:
            while np.linalg.norm(z) > level:
                level += config.level_step
            # new envelope constants; the exponential clock restarts at
            # this jump time, which is a stopping time
            w_bar = _weight_scalars(kernel.gamma, level, speed_bound)
            rate = majorant_rate(model, kernel, level, horizon)
        levels.append(level)

    traj = Trajectory(
        np.array(times),
        np.array(positions),
        np.array(velocities),
        np.array(levels, dtype=np.float64),
        horizon,
    )
    return traj, log


def simulate_ensemble(
    model, kernel, config, seed, n_paths, x0=None, z0=None, log_events=False
):
    """Independent trajectories on per-index Philox streams.

    Trajectory ``i`` draws everything from ``stream(seed, i)``, so any
    subset can be reproduced without replaying the rest.

    Returns
    -------
    (list[Trajectory], list[EventLog])
    """
    trajectories = []
    logs = []
    for i in range(n_paths):
        rng = stream(seed, i)
        traj, log = simulate(
            model, kernel, config, rng, x0=x0, z0=z0, log_events=log_events
        )
        trajectories.append(traj)
        logs.append(log)
    return trajectories, logs
