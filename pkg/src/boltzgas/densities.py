"""Time-indexed probability densities on phase space.

A density model describes a family ``f(t, x, v)`` on R^3 x R^3 (or on a
periodic box in ``x``) together with everything the jump-process engine
and the diagnostics need from it:

* pointwise evaluation of the joint density, its velocity marginal
  ``m(t, v)`` and the positional conditional ``f(t, x | v)``,
* exact samplers for the marginal and for the speed-tilted law
  ``|v| m(t, v) / E|V|`` used by rejection schemes with velocity-dependent
  rates,
* certified upper bounds: a uniform bound on the positional conditional
  and bounds on ``sup_x \\int |v|^p f(t, x, v) dv`` over a time horizon,
* an optional decomposition of the marginal into centred radial-power
  Gaussian components, which lets quadrature code reduce collision-rate
  integrals to one-dimensional radial integrals.

All models here have velocity marginals with finite moments of every
order and positional conditionals bounded uniformly in ``(t, x, v)``,
which is what the acceptance-rejection construction of the jump process
requires.  ``certify_hypotheses`` re-measures those bounds by quadrature
instead of trusting the closed forms.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gammaln

from .kernels import KernelSpec, angular_weighted_mass
from .quadrature import gauss_hermite_3d, radial_gaussian_moment

__all__ = [
    "DensityModel",
    "GaussianProductModel",
    "BoxMaxwellianModel",
    "BKWModel",
    "MollifiedEmpiricalModel",
    "RadialComponent",
    "HypothesisCheck",
    "CertificationReport",
    "certify_hypotheses",
    "bkw_relaxation_rate",
    "bkw_fourth_moment",
    "maxwell_abs_moment",
    "wrap_position",
]


def maxwell_abs_moment(variance, p):
    """Moment ``E|V|^p`` for ``V ~ N(0, variance * I_3)``.

    Valid for any real ``p > -3``; reduces to the familiar table
    ``E|V| = sqrt(8 s / pi)``, ``E|V|^2 = 3 s``, ``E|V|^4 = 15 s^2``.
    """
    if p <= -3.0:
        raise ValueError("moment order must exceed -3")
    return (2.0 * variance) ** (p / 2.0) * math.exp(
        gammaln((3.0 + p) / 2.0) - gammaln(1.5)
    )


def _tilted_abs_moment(variance, p, power2m):
    """``E|V|^p`` under the density proportional to ``|v|^(2m) N(v; s I)``."""
    return maxwell_abs_moment(variance, p + 2 * power2m) / maxwell_abs_moment(
        variance, 2 * power2m
    )


def wrap_position(x, side):
    """Fold positions into the periodic box ``[0, side)^3``."""
    return np.mod(x, side)


def _uniform_directions(rng, n):
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _sample_radius(rng, n, variance, radial_power):
    """Radii with density proportional to ``r^k exp(-r^2 / (2 s))``.

    Substituting ``y = r^2 / s`` turns the density into a Gamma law with
    shape ``(k + 1) / 2`` and scale 2, so the draw is exact.
    """
    y = rng.gamma(shape=(radial_power + 1) / 2.0, scale=2.0, size=n)
    return np.sqrt(variance * y)


def _gaussian_pdf_3d(delta, variance):
    """Isotropic Gaussian density evaluated at displacement rows."""
    norm = (2.0 * math.pi * variance) ** -1.5
    return norm * np.exp(-0.5 * np.sum(delta * delta, axis=-1) / variance)


@dataclass(frozen=True)
class RadialComponent:
    """One centred component ``weight * |v|^(2m) N(v; variance I) / Z_m``.

    ``Z_m = E|V|^(2m)`` normalises the tilt, so each component is itself
    a probability density and the weights of a decomposition sum to one.
    """

    weight: float
    variance: float
    power2m: int


class DensityModel(ABC):
    """Family ``f(t, x, v)`` with samplers and certified bounds.

    Array conventions: ``x`` and ``v`` are ``(n, 3)`` arrays (or single
    ``(3,)`` vectors), ``t`` is a scalar.  Methods returning densities
    give one value per row.
    """

    #: Period of the spatial box, or None for models on all of R^3.
    box_side: float | None = None

    @abstractmethod
    def evaluate(self, t, x, v):
        """Joint density ``f(t, x, v)``."""

    @abstractmethod
    def velocity_marginal(self, t, v):
        """Marginal ``m(t, v) = \\int f(t, x, v) dx``."""

    def conditional(self, t, x, v):
        """Positional conditional ``f(t, x | v)``.

        Zero where the marginal vanishes.
        """
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        joint = self.evaluate(t, x, v)
        marg = self.velocity_marginal(t, v)
        out = np.zeros_like(joint)
        np.divide(joint, marg, out=out, where=marg > 0.0)
        return out

    @abstractmethod
    def conditional_sup(self, horizon):
        """Uniform bound on ``f(t, x | v)`` over ``t <= horizon`` and all x, v."""

    @abstractmethod
    def sample_velocity(self, t, rng, n):
        """Draw ``n`` velocities from the marginal at time ``t``."""

    @abstractmethod
    def sample_speed_tilted(self, t, rng, n):
        """Draw from the speed-tilted marginal ``|v| m(t, v) / E|V|``."""

    @abstractmethod
    def sample_state(self, t, rng, n):
        """Draw ``(x, v)`` pairs from the joint density at time ``t``."""

    @abstractmethod
    def mean_speed(self, t):
        """Exact ``E|V|`` under the marginal at time ``t``."""

    @abstractmethod
    def speed_moment(self, t, p):
        """Exact ``E|V|^p`` under the marginal at time ``t`` (p > -3)."""

    def speed_sq_bound(self, horizon):
        """Upper bound on ``sup_{t <= horizon} E|V|^2``.

        ``E|V| <= sqrt(E|V|^2)`` turns this into a horizon-wide bound on
        the mean speed, which rejection envelopes rely on.
        """
        grid = np.linspace(0.0, horizon, 257)
        values = np.array([self.speed_moment(t, 2) for t in grid])
        return float(values.max()) * (1.0 + 1e-9)

    @abstractmethod
    def moment_bound(self, p, horizon):
        """Bound on ``sup_{t <= horizon} sup_x \\int |v|^p f(t, x, v) dv``."""

    @abstractmethod
    def gradient_moment_bound(self, horizon):
        """Bound on ``sup_{t, x} \\int max(1, |v|^2) |grad_x f| dv``."""

    @abstractmethod
    def grad_x(self, t, x, v):
        """Spatial gradient of the joint density, one row per input row."""

    def radial_components(self, t):
        """Centred radial-power Gaussian decomposition of the marginal.

        Returns a list of :class:`RadialComponent` whose weighted sum is
        ``m(t, .)``, or None when no such decomposition exists.
        """
        return None


class GaussianProductModel(DensityModel):
    """Maxwellian velocities times an isotropic Gaussian position bump.

    With ``drift="static"`` the density is constant in time,

        f(t, x, v) = N(x; 0, pos_var I) N(v; 0, vel_var I).

    With ``drift="free_transport"`` the position bump is carried along
    straight-line characteristics,

        f(t, x, v) = N(x - t v; 0, pos_var I) N(v; 0, vel_var I),

    which solves the collisionless transport equation exactly and gives
    the engine an analytically known time-dependent driver.
    """

    def __init__(self, vel_var=1.0, pos_var=1.0, drift="static"):
        if vel_var <= 0.0 or pos_var <= 0.0:
            raise ValueError("variances must be positive")
        if drift not in ("static", "free_transport"):
            raise ValueError(f"unknown drift mode {drift!r}")
        self.vel_var = float(vel_var)
        self.pos_var = float(pos_var)
        self.drift = drift
        self.box_side = None

    def _center(self, t, v):
        if self.drift == "free_transport":
            return t * v
        return np.zeros_like(v)

    def evaluate(self, t, x, v):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        pos = _gaussian_pdf_3d(x - self._center(t, v), self.pos_var)
        return pos * _gaussian_pdf_3d(v, self.vel_var)

    def velocity_marginal(self, t, v):
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        return _gaussian_pdf_3d(v, self.vel_var)

    def conditional_sup(self, horizon):
        return (2.0 * math.pi * self.pos_var) ** -1.5

    def sample_velocity(self, t, rng, n):
        return math.sqrt(self.vel_var) * rng.standard_normal((n, 3))

    def sample_speed_tilted(self, t, rng, n):
        r = _sample_radius(rng, n, self.vel_var, 3)
        return r[:, None] * _uniform_directions(rng, n)

    def sample_state(self, t, rng, n):
        v = self.sample_velocity(t, rng, n)
        x = self._center(t, v) + math.sqrt(self.pos_var) * rng.standard_normal((n, 3))
        return x, v

    def mean_speed(self, t):
        return maxwell_abs_moment(self.vel_var, 1)

    def speed_moment(self, t, p):
        return maxwell_abs_moment(self.vel_var, p)

    def moment_bound(self, p, horizon):
        return self.conditional_sup(horizon) * maxwell_abs_moment(self.vel_var, p)

    def gradient_moment_bound(self, horizon):
        # sup_r r exp(-r^2 / (2 pv)) / pv is attained at r = sqrt(pv).
        grad_peak = (
            (2.0 * math.pi * self.pos_var) ** -1.5
            * math.exp(-0.5)
            / math.sqrt(self.pos_var)
        )
        return grad_peak * (1.0 + 3.0 * self.vel_var)

    def grad_x(self, t, x, v):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        delta = x - self._center(t, v)
        f = self.evaluate(t, x, v)
        return -f[:, None] * delta / self.pos_var

    def radial_components(self, t):
        return [RadialComponent(1.0, self.vel_var, 0)]


class BoxMaxwellianModel(DensityModel):
    """Spatially uniform Maxwellian on a periodic box.

    f(t, x, v) = N(v; 0, vel_var I) / side^3 for x in [0, side)^3.

    This law is stationary for the collision dynamics, so it doubles as
    the reference equilibrium in relaxation and entropy experiments.
    """

    def __init__(self, side=1.0, vel_var=1.0):
        if side <= 0.0 or vel_var <= 0.0:
            raise ValueError("box side and velocity variance must be positive")
        self.side = float(side)
        self.vel_var = float(vel_var)
        self.box_side = self.side

    def evaluate(self, t, x, v):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        n = max(x.shape[0], v.shape[0])
        return np.full(n, self.side**-3) * _gaussian_pdf_3d(v, self.vel_var)

    def velocity_marginal(self, t, v):
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        return _gaussian_pdf_3d(v, self.vel_var)

    def conditional_sup(self, horizon):
        return self.side**-3

    def sample_velocity(self, t, rng, n):
        return math.sqrt(self.vel_var) * rng.standard_normal((n, 3))

    def sample_speed_tilted(self, t, rng, n):
        r = _sample_radius(rng, n, self.vel_var, 3)
        return r[:, None] * _uniform_directions(rng, n)

    def sample_state(self, t, rng, n):
        x = self.side * rng.random((n, 3))
        v = self.sample_velocity(t, rng, n)
        return x, v

    def mean_speed(self, t):
        return maxwell_abs_moment(self.vel_var, 1)

    def speed_moment(self, t, p):
        return maxwell_abs_moment(self.vel_var, p)

    def moment_bound(self, p, horizon):
        return self.side**-3 * maxwell_abs_moment(self.vel_var, p)

    def gradient_moment_bound(self, horizon):
        return 0.0

    def grad_x(self, t, x, v):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        n = max(x.shape[0], v.shape[0])
        return np.zeros((n, 3))

    def radial_components(self, t):
        return [RadialComponent(1.0, self.vel_var, 0)]


class BKWModel(DensityModel):
    """Bobylev-Krook-Wu relaxing family on a periodic box.

    The velocity marginal is the classical closed-form solution of the
    spatially homogeneous equation with constant collision rate,

        q(t, v) = N(v; 0, s K I) [ (5K - 3)/(2K)
                                   + (1 - K)/(2 K^2) |v|^2 / s ],

    with ``K(t) = 1 - c0 exp(-rate * t)``.  Energy ``E|V|^2 = 3 s`` is
    conserved while the fourth moment relaxes as
    ``E|V|^4 = 15 s^2 K (2 - K)``.  The family stays nonnegative for
    ``0 < c0 <= 2/5``.  ``rate`` must match the collision kernel for the
    family to be dynamically consistent; :func:`bkw_relaxation_rate`
    computes that value.
    """

    def __init__(self, side=1.0, vel_var=1.0, c0=0.4, rate=1.0):
        if side <= 0.0 or vel_var <= 0.0:
            raise ValueError("box side and velocity variance must be positive")
        if not 0.0 < c0 <= 0.4:
            raise ValueError("c0 must lie in (0, 2/5] for a nonnegative density")
        if rate <= 0.0:
            raise ValueError("relaxation rate must be positive")
        self.side = float(side)
        self.vel_var = float(vel_var)
        self.c0 = float(c0)
        self.rate = float(rate)
        self.box_side = self.side

    def shape_factor(self, t):
        """``K(t) = 1 - c0 exp(-rate t)``, increasing from ``1 - c0`` to 1."""
        return 1.0 - self.c0 * math.exp(-self.rate * t)

    def _weights(self, t):
        k = self.shape_factor(t)
        w1 = (5.0 * k - 3.0) / (2.0 * k)
        w2 = 3.0 * (1.0 - k) / (2.0 * k)
        return k, w1, w2

    def velocity_marginal(self, t, v):
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        k, w1, w2 = self._weights(t)
        sk = self.vel_var * k
        base = _gaussian_pdf_3d(v, sk)
        tilt = np.sum(v * v, axis=-1) / (3.0 * sk)
        return base * (w1 + w2 * tilt)

    def evaluate(self, t, x, v):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        marg = self.velocity_marginal(t, v)
        if x.shape[0] > marg.shape[0]:
            marg = np.broadcast_to(marg, (x.shape[0],))
        return marg * self.side**-3

    def conditional_sup(self, horizon):
        return self.side**-3

    def sample_velocity(self, t, rng, n):
        k, w1, w2 = self._weights(t)
        sk = self.vel_var * k
        pick_tilt = rng.random(n) < w2
        out = math.sqrt(sk) * rng.standard_normal((n, 3))
        n_tilt = int(pick_tilt.sum())
        if n_tilt:
            r = _sample_radius(rng, n_tilt, sk, 4)
            out[pick_tilt] = r[:, None] * _uniform_directions(rng, n_tilt)
        return out

    def sample_speed_tilted(self, t, rng, n):
        k, w1, w2 = self._weights(t)
        sk = self.vel_var * k
        mass1 = w1 * maxwell_abs_moment(sk, 1)
        mass2 = w2 * _tilted_abs_moment(sk, 1, 1)
        prob2 = mass2 / (mass1 + mass2)
        pick2 = rng.random(n) < prob2
        powers = np.where(pick2, 5, 3)
        out = np.empty((n, 3))
        for radial_power in (3, 5):
            mask = powers == radial_power
            cnt = int(mask.sum())
            if cnt:
                r = _sample_radius(rng, cnt, sk, radial_power)
                out[mask] = r[:, None] * _uniform_directions(rng, cnt)
        return out

    def sample_state(self, t, rng, n):
        x = self.side * rng.random((n, 3))
        v = self.sample_velocity(t, rng, n)
        return x, v

    def mean_speed(self, t):
        k, w1, w2 = self._weights(t)
        sk = self.vel_var * k
        return w1 * maxwell_abs_moment(sk, 1) + w2 * _tilted_abs_moment(sk, 1, 1)

    def speed_moment(self, t, p):
        k, w1, w2 = self._weights(t)
        sk = self.vel_var * k
        return w1 * maxwell_abs_moment(sk, p) + w2 * _tilted_abs_moment(sk, p, 1)

    def fourth_moment(self, t):
        """Closed form ``E|V|^4 = 15 s^2 K(t) (2 - K(t))``."""
        k = self.shape_factor(t)
        return 15.0 * self.vel_var**2 * k * (2.0 - k)

    def moment_bound(self, p, horizon):
        grid = np.linspace(0.0, horizon, 2049)
        values = np.array([self.speed_moment(t, p) for t in grid])
        return self.side**-3 * float(values.max()) * (1.0 + 1e-9)

    def gradient_moment_bound(self, horizon):
        return 0.0

    def grad_x(self, t, x, v):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        n = max(x.shape[0], v.shape[0])
        return np.zeros((n, 3))

    def radial_components(self, t):
        k, w1, w2 = self._weights(t)
        sk = self.vel_var * k
        return [RadialComponent(w1, sk, 0), RadialComponent(w2, sk, 1)]


class MollifiedEmpiricalModel(DensityModel):
    """Gaussian-mollified empirical measure of a particle snapshot.

    f(x, v) = (1/N) sum_i N(x - x_i; h_x^2 I) N(v - v_i; h_v^2 I),

    frozen in time (the snapshot already carries its timestamp; the ``t``
    arguments are accepted and ignored).  On a periodic box the spatial
    kernel uses the minimum-image displacement, which matches the exact
    periodic heat kernel up to terms of order ``exp(-(side/2)^2 / (2 h_x^2))``
    and therefore requires ``h_x`` well below the box side.
    """

    def __init__(self, positions, velocities, h_x, h_v, side=None):
        positions = np.asarray(positions, dtype=np.float64)
        velocities = np.asarray(velocities, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ValueError("positions must be an (N, 3) array")
        if velocities.shape != positions.shape:
            raise ValueError("velocities must match positions in shape")
        if not (np.isfinite(positions).all() and np.isfinite(velocities).all()):
            raise ValueError("particle states must be finite")
        if h_x <= 0.0 or h_v <= 0.0:
            raise ValueError("mollifier widths must be positive")
        if side is not None:
            if side <= 0.0:
                raise ValueError("box side must be positive")
            if h_x > side / 8.0:
                raise ValueError("spatial width too large for the periodic box")
            positions = wrap_position(positions, side)
        self.positions = positions
        self.velocities = velocities
        self.h_x = float(h_x)
        self.h_v = float(h_v)
        self.box_side = None if side is None else float(side)
        self._speeds = np.linalg.norm(velocities, axis=1)
        # E|v_i + h_v xi| has a closed radial-integral form; precompute
        # the per-particle means once since the snapshot never changes.
        self._tilt_masses = radial_gaussian_moment(self._speeds, self.h_v**2, 0, 1)

    @classmethod
    def from_csv(cls, path, h_x, h_v, side=None):
        """Load a snapshot written with columns x1,x2,x3,v1,v2,v3."""
        data = np.genfromtxt(path, delimiter=",", names=True)
        cols = ["x1", "x2", "x3", "v1", "v2", "v3"]
        missing = [c for c in cols if c not in (data.dtype.names or ())]
        if missing:
            raise ValueError(f"snapshot file lacks columns {missing}")
        stacked = np.column_stack([np.atleast_1d(data[c]) for c in cols])
        return cls(stacked[:, :3], stacked[:, 3:], h_x, h_v, side=side)

    def _spatial_delta(self, x, centers):
        delta = x[:, None, :] - centers[None, :, :]
        if self.box_side is not None:
            delta -= self.box_side * np.round(delta / self.box_side)
        return delta

    def _row_chunks(self, n_rows):
        # Pairwise row-by-particle arrays are materialised per chunk to
        # keep peak memory near 100 MB regardless of the query size.
        per_chunk = max(1, int(4e6 / max(len(self.velocities), 1)))
        for start in range(0, n_rows, per_chunk):
            yield slice(start, min(start + per_chunk, n_rows))

    def evaluate(self, t, x, v):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        x, v = np.broadcast_arrays(x, v)
        out = np.empty(x.shape[0])
        for rows in self._row_chunks(x.shape[0]):
            dx = self._spatial_delta(x[rows], self.positions)
            dv = v[rows, None, :] - self.velocities[None, :, :]
            gx = _gaussian_pdf_3d(dx, self.h_x**2)
            gv = _gaussian_pdf_3d(dv, self.h_v**2)
            out[rows] = np.mean(gx * gv, axis=1)
        return out

    def velocity_marginal(self, t, v):
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        out = np.empty(v.shape[0])
        for rows in self._row_chunks(v.shape[0]):
            dv = v[rows, None, :] - self.velocities[None, :, :]
            out[rows] = np.mean(_gaussian_pdf_3d(dv, self.h_v**2), axis=1)
        return out

    def conditional_sup(self, horizon):
        return (2.0 * math.pi * self.h_x**2) ** -1.5

    def sample_velocity(self, t, rng, n):
        idx = rng.integers(0, len(self.velocities), size=n)
        return self.velocities[idx] + self.h_v * rng.standard_normal((n, 3))

    def sample_speed_tilted(self, t, rng, n):
        # Component i is chosen with probability proportional to its
        # mean speed, then |v| N(v; v_i, h^2) / E_i is drawn by rejection
        # under the envelope (|v_i| + |v - v_i|) N(v; v_i, h^2).
        probs = self._tilt_masses / self._tilt_masses.sum()
        idx = rng.choice(len(self.velocities), size=n, p=probs)
        out = np.empty((n, 3))
        pending = np.arange(n)
        for _ in range(200):
            m = len(pending)
            centers = self.velocities[idx[pending]]
            center_speed = self._speeds[idx[pending]]
            shift_mean = maxwell_abs_moment(self.h_v**2, 1)
            take_shift = rng.random(m) < shift_mean / (center_speed + shift_mean)
            shift = self.h_v * rng.standard_normal((m, 3))
            tilted_r = _sample_radius(rng, m, self.h_v**2, 3)
            shift = np.where(
                take_shift[:, None],
                tilted_r[:, None] * _uniform_directions(rng, m),
                shift,
            )
            cand = centers + shift
            ratio = np.linalg.norm(cand, axis=1) / (
                center_speed + np.linalg.norm(shift, axis=1)
            )
            accept = rng.random(m) < ratio
            out[pending[accept]] = cand[accept]
            pending = pending[~accept]
            if len(pending) == 0:
                return out
        raise RuntimeError("speed-tilted rejection sampler failed to terminate")

    def sample_state(self, t, rng, n):
        idx = rng.integers(0, len(self.velocities), size=n)
        x = self.positions[idx] + self.h_x * rng.standard_normal((n, 3))
        if self.box_side is not None:
            x = wrap_position(x, self.box_side)
        v = self.velocities[idx] + self.h_v * rng.standard_normal((n, 3))
        return x, v

    def mean_speed(self, t):
        return float(self._tilt_masses.mean())

    def speed_moment(self, t, p):
        vals = radial_gaussian_moment(self._speeds, self.h_v**2, 0, p)
        return float(vals.mean())

    def moment_bound(self, p, horizon):
        return self.conditional_sup(horizon) * self.speed_moment(0.0, p) * (
            1.0 + 1e-9
        )

    def gradient_moment_bound(self, horizon):
        grad_peak = (
            (2.0 * math.pi * self.h_x**2) ** -1.5 * math.exp(-0.5) / self.h_x
        )
        return grad_peak * (1.0 + self.speed_moment(0.0, 2)) * (1.0 + 1e-9)

    def grad_x(self, t, x, v):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        x, v = np.broadcast_arrays(x, v)
        out = np.empty((x.shape[0], 3))
        for rows in self._row_chunks(x.shape[0]):
            dx = self._spatial_delta(x[rows], self.positions)
            dv = v[rows, None, :] - self.velocities[None, :, :]
            gx = _gaussian_pdf_3d(dx, self.h_x**2)
            gv = _gaussian_pdf_3d(dv, self.h_v**2)
            weights = (gx * gv)[:, :, None] * (-dx / self.h_x**2)
            out[rows] = np.mean(weights, axis=1)
        return out


def bkw_relaxation_rate(kernel: KernelSpec):
    """Relaxation rate that makes the closed family consistent.

    Equals ``2 pi c \\int sin^2(theta/2) cos^2(theta/2) Q(dtheta)``, the
    constant governing fourth-moment decay at constant collision rate.
    """
    beta1 = angular_weighted_mass(kernel, "sin2_half")
    beta2 = angular_weighted_mass(kernel, "sin4_half")
    return 2.0 * math.pi * kernel.c * (beta1 - beta2)


def bkw_fourth_moment(
    times,
    kernel: KernelSpec,
    vel_var=1.0,
    c0=0.4,
    m2_init=None,
    m4_init=None,
    rate=None,
):
    """Second and fourth moments of a tagged particle in a relaxing bath.

    The tagged velocity jumps at the constant rate set by ``kernel``
    (``gamma`` must be 0) against bath velocities drawn from the closed
    relaxing family with energy ``3 vel_var`` and shape parameter
    ``K(t) = 1 - c0 exp(-rate t)``.  Averaging the post-collision moments
    over the angular measure closes the evolution into a linear system

        m2' = 2 pi c b1 (a2 - m2)
        m4' = c [ 4 pi b1 (a2 m2 - m4)
                  + 2 pi b2 (a4(t) - 2 a2 m2 + m4)
                  + (8 pi / 3)(b1 - b2) a2 m2 ]

    with ``b1 = \\int sin^2(theta/2) Q``, ``b2 = \\int sin^4(theta/2) Q``,
    bath moments ``a2 = 3 s`` and ``a4(t) = 15 s^2 K (2 - K)``.  The
    system is integrated with tight tolerances and gives an independent
    prediction for simulated moments.

    Parameters
    ----------
    times : array_like
        Query times, nonnegative.
    kernel : KernelSpec
        Collision kernel; requires ``gamma == 0``.
    vel_var, c0 : float
        Bath parameters (per-component variance and initial shape gap).
    m2_init, m4_init : float, optional
        Tagged-particle moments at time zero.  Default to the bath's own
        moments, the case of a particle started in the bath law.
    rate : float, optional
        Bath relaxation rate; defaults to :func:`bkw_relaxation_rate`.

    Returns
    -------
    (m2, m4) : pair of ndarrays matching ``times``.
    """
    if kernel.gamma != 0.0:
        raise ValueError(
            "moment closure requires a velocity-independent collision rate "
            "(gamma = 0)"
        )
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if times.size == 0 or (times < 0.0).any():
        raise ValueError("query times must be nonnegative")
    if rate is None:
        rate = bkw_relaxation_rate(kernel)
    s = float(vel_var)
    beta1 = angular_weighted_mass(kernel, "sin2_half")
    beta2 = angular_weighted_mass(kernel, "sin4_half")
    c = kernel.c
    a2 = 3.0 * s

    def bath_m4(t):
        k = 1.0 - c0 * np.exp(-rate * t)
        return 15.0 * s * s * k * (2.0 - k)

    if m2_init is None:
        m2_init = a2
    if m4_init is None:
        m4_init = bath_m4(0.0)

    def rhs(t, y):
        m2, m4 = y
        d2 = 2.0 * math.pi * c * beta1 * (a2 - m2)
        d4 = c * (
            4.0 * math.pi * beta1 * (a2 * m2 - m4)
            + 2.0 * math.pi * beta2 * (bath_m4(t) - 2.0 * a2 * m2 + m4)
            + (8.0 * math.pi / 3.0) * (beta1 - beta2) * a2 * m2
        )
        return [d2, d4]

    t_end = float(times.max())
    sol = solve_ivp(
        rhs,
        (0.0, max(t_end, 1e-12)),
        [float(m2_init), float(m4_init)],
        method="DOP853",
        rtol=1e-11,
        atol=1e-13,
        dense_output=True,
    )
    if not sol.success:
        raise RuntimeError(f"moment integration failed: {sol.message}")
    vals = sol.sol(times)
    return vals[0], vals[1]


@dataclass
class HypothesisCheck:
    """Outcome of one measured bound."""

    name: str
    description: str
    measured: float
    declared_bound: float
    refinement_drift: float
    passed: bool


@dataclass
class CertificationReport:
    """Collected hypothesis checks for one model and kernel."""

    model: str
    gamma: float
    horizon: float
    checks: list[HypothesisCheck] = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _position_grid(model, horizon, n_side):
    if model.box_side is not None:
        edges = np.linspace(0.0, model.box_side, n_side, endpoint=False)
    else:
        spread = 1.0
        if isinstance(model, GaussianProductModel):
            spread = math.sqrt(model.pos_var)
            if model.drift == "free_transport":
                spread += horizon * math.sqrt(model.vel_var) * 3.0
        elif isinstance(model, MollifiedEmpiricalModel):
            spread = float(np.abs(model.positions).max()) + 4.0 * model.h_x
        edges = np.linspace(-2.5 * spread, 2.5 * spread, n_side)
    xg, yg, zg = np.meshgrid(edges, edges, edges, indexing="ij")
    return np.column_stack([xg.ravel(), yg.ravel(), zg.ravel()])


def _moment_suprema(model, times, x_grid, powers, n_nodes):
    """Suprema over the grid of ``\\int |v|^p f dv`` and the gradient moment.

    Integrates against a Maxwellian envelope matched to the model's
    velocity scale, evaluating the joint density once per time and
    reusing it for every velocity weight.  Returns one supremum per
    entry of ``powers`` plus the gradient-moment supremum appended last.
    """
    n_x = len(x_grid)
    sups = np.zeros(len(powers) + 1)
    for t in times:
        scale_sq = max(model.speed_moment(t, 2) / 3.0, 1e-12)
        nodes, weights = gauss_hermite_3d(n_nodes, scale_sq)
        ratio = weights / _gaussian_pdf_3d(nodes, scale_sq)
        speeds = np.linalg.norm(nodes, axis=1)
        xs = np.repeat(x_grid, len(nodes), axis=0)
        vs = np.tile(nodes, (n_x, 1))
        f_vals = model.evaluate(t, xs, vs).reshape(n_x, len(nodes))
        for k, p in enumerate(powers):
            integ = f_vals @ (ratio * speeds**p)
            sups[k] = max(sups[k], float(integ.max()))
        g_norm = np.linalg.norm(model.grad_x(t, xs, vs), axis=1)
        cap = np.maximum(1.0, speeds * speeds)
        integ = g_norm.reshape(n_x, len(nodes)) @ (ratio * cap)
        sups[-1] = max(sups[-1], float(integ.max()))
    return sups


def certify_hypotheses(model, kernel, horizon, n_time=5, n_side=4, n_nodes=16):
    """Measure the integrability bounds the jump construction relies on.

    For a grid of times and positions the following quantities are
    integrated in ``v`` by Gauss-Hermite quadrature and compared against
    the model's declared bounds:

    * mass ``\\int f dv`` and moments ``\\int |v|^p f dv`` for
      ``p = 1 + gamma, 2, 3``,
    * the gradient moment ``\\int max(1, |v|^2) |grad_x f| dv``.

    Every check also repeats the quadrature with 1.5x the node count;
    a drift beyond 0.5% marks the value unresolved and fails the check,
    which is how a divergent integrand shows up.

    Returns a :class:`CertificationReport`; no exception is raised for a
    failed bound so callers can inspect partial results.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    times = np.linspace(0.0, horizon, n_time)
    x_grid = _position_grid(model, horizon, n_side)
    report = CertificationReport(
        model=type(model).__name__, gamma=kernel.gamma, horizon=horizon
    )

    powers = [0.0, 1.0 + kernel.gamma, 2.0, 3.0]
    names = ["mass", "moment_1+gamma", "moment_2", "moment_3"]
    declared = [model.moment_bound(p, horizon) for p in powers]
    declared.append(model.gradient_moment_bound(horizon))
    names.append("gradient_moment")

    coarse = _moment_suprema(model, times, x_grid, powers, n_nodes)
    fine = _moment_suprema(model, times, x_grid, powers, int(n_nodes * 1.5))

    for k, (name, bound) in enumerate(zip(names, declared)):
        drift = abs(fine[k] - coarse[k]) / max(abs(fine[k]), 1e-300)
        ok = bool(np.isfinite(fine[k])) and fine[k] <= bound * 1.005 + 1e-12
        # The gradient weight max(1, |v|^2) has a kink, which slows the
        # Gauss-Hermite rate; a divergent integrand still shows up as
        # order-one growth under refinement, so the looser guard keeps
        # its purpose.
        drift_tol = 2e-2 if name == "gradient_moment" else 5e-3
        if fine[k] > 1e-12:
            ok = ok and drift < drift_tol
        if name == "gradient_moment":
            desc = "sup_(t,x) int max(1,|v|^2) |grad_x f| dv"
        else:
            desc = (
                f"sup_(t,x) int |v|^{powers[k]:g} f dv over horizon {horizon:g}"
            )
        report.checks.append(
            HypothesisCheck(
                name=name,
                description=desc,
                measured=float(fine[k]),
                declared_bound=float(bound),
                refinement_drift=float(drift),
                passed=ok,
            )
        )
    return report
