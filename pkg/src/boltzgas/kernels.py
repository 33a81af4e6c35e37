"""Collision kernels: relative-speed cross sections and angular measures.

A kernel couples a power-law cross section ``sigma(r) = c * r**gamma``
with an angular measure ``Q(dtheta)`` on ``(0, pi]``.  Two angular
families are provided:

* ``hard_sphere``: ``Q(dtheta) = sin(theta/2) cos(theta/2) dtheta``,
  total mass 1 over the full angle range.
* ``power_law``: ``Q(dtheta) = theta**(-1-nu) dtheta`` with
  ``nu in (0, 1)``; the mass near ``theta = 0`` diverges, so simulation
  requires a cutoff ``epsilon > 0``, while the first moment
  ``int theta Q(dtheta)`` stays finite (grazing collisions are summable).

``epsilon`` restricts the measure to ``[epsilon, pi]`` and is part of
the kernel specification because every sampled or integrated quantity
downstream refers to the cutoff measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

__all__ = [
    "HARD_SPHERE",
    "POWER_LAW",
    "KernelSpec",
    "sigma",
    "angular_mass",
    "sample_theta",
    "theta_first_moment",
    "angular_weighted_mass",
]

HARD_SPHERE = "hard_sphere"
POWER_LAW = "power_law"

_DEFAULT_POWER_LAW_EPSILON = 1e-3


@dataclass(frozen=True)
class KernelSpec:
    """Validated collision kernel parameters.

    Parameters
    ----------
    gamma : float
        Cross-section exponent in ``(-1, 1]``.  ``gamma = 1`` is the
        hard-sphere scaling, ``gamma = 0`` the Maxwell (speed
        independent) scaling.
    c : float
        Cross-section prefactor, strictly positive.
    angular : str
        ``"hard_sphere"`` or ``"power_law"``.
    nu : float, optional
        Grazing-singularity exponent in ``(0, 1)``; required for the
        power-law family and rejected otherwise.
    epsilon : float, optional
        Angular cutoff in ``[0, pi)``.  Defaults to 0 for hard sphere
        and to 1e-3 for power law, whose total mass is infinite without
        a cutoff.
    """

    gamma: float
    c: float
    angular: str
    nu: float | None = None
    epsilon: float = field(default=-1.0)

    def __post_init__(self):
        if not (-1.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (-1, 1], got {self.gamma}")
        if not self.c > 0.0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.angular not in (HARD_SPHERE, POWER_LAW):
            raise ValueError(f"unknown angular family {self.angular!r}")
        if self.angular == POWER_LAW:
            if self.nu is None or not (0.0 < self.nu < 1.0):
                raise ValueError(
                    f"power_law requires nu in (0, 1), got {self.nu}"
                )
        elif self.nu is not None:
            raise ValueError("nu is only meaningful for the power_law family")
        eps = self.epsilon
        if eps == -1.0:
            eps = _DEFAULT_POWER_LAW_EPSILON if self.angular == POWER_LAW else 0.0
            object.__setattr__(self, "epsilon", eps)
        if not (0.0 <= self.epsilon < np.pi):
            raise ValueError(
                f"epsilon must lie in [0, pi), got {self.epsilon}"
            )
        if self.angular == POWER_LAW and self.epsilon == 0.0:
            raise ValueError("power_law has infinite mass without a cutoff")

    def to_config(self):
        """Serialize to the run-config mapping."""
        out = {"gamma": self.gamma, "c": self.c, "angular": self.angular,
               "epsilon": self.epsilon}
        if self.nu is not None:
            out["nu"] = self.nu
        return out

    @staticmethod
    def from_config(mapping):
        """Build from a run-config mapping, rejecting unknown keys."""
        allowed = {"gamma", "c", "angular", "nu", "epsilon"}
        unknown = set(mapping) - allowed
        if unknown:
            raise ValueError(f"unknown kernel keys: {sorted(unknown)}")
        if "gamma" not in mapping or "c" not in mapping or "angular" not in mapping:
            raise ValueError("kernel config requires gamma, c and angular")
        return KernelSpec(
            gamma=float(mapping["gamma"]),
            c=float(mapping["c"]),
            angular=str(mapping["angular"]),
            nu=float(mapping["nu"]) if "nu" in mapping else None,
            epsilon=float(mapping.get("epsilon", -1.0)),
        )


def sigma(spec, r):
    """Cross section ``c * r**gamma`` of the relative speed ``r``.

    For ``gamma < 0`` the value diverges as ``r -> 0``; that limit is
    returned as ``inf`` and callers must reject it.  Negative ``r`` is
    invalid input.

    Parameters
    ----------
    spec : KernelSpec
    r : float or array_like
        Relative speed(s), nonnegative.

    Returns
    -------
    float or numpy.ndarray
    """
    r_ = np.asarray(r, dtype=np.float64)
    if np.any(r_ < 0.0):
        raise ValueError("relative speed must be nonnegative")
    if spec.gamma == 0.0:
        out = np.full_like(r_, spec.c)
    elif spec.gamma > 0.0:
        out = spec.c * r_**spec.gamma
    else:
        with np.errstate(divide="ignore"):
            out = spec.c * r_**spec.gamma
    if np.isscalar(r) or r_.ndim == 0:
        return float(out)
    return out


def _hard_sphere_mass(eps):
    # int_eps^pi sin(t/2) cos(t/2) dt = cos^2(eps/2) = (1 + cos(eps)) / 2
    return 0.5 * (1.0 + np.cos(eps))


def _power_law_mass(eps, nu):
    return (eps ** (-nu) - np.pi ** (-nu)) / nu


def angular_mass(spec, epsilon=None):
    """Total mass of the angular measure on ``[epsilon, pi]``.

    Parameters
    ----------
    spec : KernelSpec
    epsilon : float, optional
        Cutoff overriding ``spec.epsilon``.

    Returns
    -------
    float
    """
    eps = spec.epsilon if epsilon is None else float(epsilon)
    if not (0.0 <= eps <= np.pi):
        raise ValueError(f"epsilon must lie in [0, pi], got {eps}")
    if spec.angular == HARD_SPHERE:
        return float(_hard_sphere_mass(eps))
    if eps == 0.0:
        raise ValueError("power_law has infinite mass without a cutoff")
    return float(_power_law_mass(eps, spec.nu))


def sample_theta(spec, u, epsilon=None):
    """Inverse-CDF sample of the polar angle from ``Q`` on ``[eps, pi]``.

    ``u = 0`` maps to the cutoff ``eps`` and ``u -> 1`` to ``pi``.  For
    the hard-sphere family with ``eps = 0`` the closed form is
    ``theta = 2 asin(sqrt(u))``.

    Parameters
    ----------
    spec : KernelSpec
    u : float or array_like
        Uniform variates in ``[0, 1)``.
    epsilon : float, optional
        Cutoff overriding ``spec.epsilon``.

    Returns
    -------
    float or numpy.ndarray
        Angles in ``[eps, pi]``.
    """
    eps = spec.epsilon if epsilon is None else float(epsilon)
    u_ = np.asarray(u, dtype=np.float64)
    if np.any((u_ < 0.0) | (u_ >= 1.0)):
        raise ValueError("u must lie in [0, 1)")
    if spec.angular == HARD_SPHERE:
        # CDF(t) = (sin^2(t/2) - sin^2(eps/2)) / (1 - sin^2(eps/2))
        s0 = np.sin(0.5 * eps) ** 2
        out = 2.0 * np.arcsin(np.sqrt(s0 + u_ * (1.0 - s0)))
    else:
        if eps == 0.0:
            raise ValueError("power_law sampling requires a cutoff")
        nu = spec.nu
        a = eps ** (-nu)
        b = np.pi ** (-nu)
        out = (a - u_ * (a - b)) ** (-1.0 / nu)
    if np.isscalar(u) or u_.ndim == 0:
        return float(out)
    return out


def theta_first_moment(spec, epsilon=None):
    """First moment ``int_[eps, pi] theta Q(dtheta)``.

    Closed forms for both families: hard sphere gives
    ``(pi - sin(eps) + eps cos(eps)) / 2`` and power law gives
    ``(pi**(1-nu) - eps**(1-nu)) / (1 - nu)``.  Both stay finite at
    ``eps = 0`` (grazing collisions have summable angle even when their
    count diverges).

    Returns
    -------
    float
    """
    eps = spec.epsilon if epsilon is None else float(epsilon)
    if spec.angular == HARD_SPHERE:
        return float(0.5 * (np.pi - np.sin(eps) + eps * np.cos(eps)))
    nu = spec.nu
    return float((np.pi ** (1.0 - nu) - eps ** (1.0 - nu)) / (1.0 - nu))


def angular_weighted_mass(spec, weight, epsilon=None):
    """Moments ``int_[eps, pi] weight(theta) Q(dtheta)`` used downstream.

    ``weight`` is one of ``"sin2_half"`` (``sin^2(theta/2)``),
    ``"sin4_half"`` (``sin^4(theta/2)``) or ``"sin_half"``
    (``sin(theta/2)``).  Hard-sphere values are closed-form; power-law
    values come from adaptive quadrature at relative 1e-12.

    Returns
    -------
    float
    """
    eps = spec.epsilon if epsilon is None else float(epsilon)
    if weight not in ("sin2_half", "sin4_half", "sin_half"):
        raise ValueError(f"unknown weight {weight!r}")
    if spec.angular == HARD_SPHERE:
        # With x = sin^2(theta/2), Q pushes forward to dx on [x0, 1],
        # x0 = sin^2(eps/2), so moments of x**k are (1 - x0**(k+1))/(k+1).
        x0 = np.sin(0.5 * eps) ** 2
        if weight == "sin2_half":
            return float(0.5 * (1.0 - x0**2))
        if weight == "sin4_half":
            return float((1.0 - x0**3) / 3.0)
        # E[sqrt(x)] over dx: (2/3)(1 - x0^(3/2))
        return float((2.0 / 3.0) * (1.0 - x0**1.5))
    fn = {
        "sin2_half": lambda t: np.sin(0.5 * t) ** 2 * t ** (-1.0 - spec.nu),
        "sin4_half": lambda t: np.sin(0.5 * t) ** 4 * t ** (-1.0 - spec.nu),
        "sin_half": lambda t: np.sin(0.5 * t) * t ** (-1.0 - spec.nu),
    }[weight]
    # The eps = 0 endpoint is an integrable algebraic singularity for
    # nu < 1, which QAGS transforms away.
    val, _err = quad(fn, eps, np.pi, epsabs=0.0, epsrel=1e-12, limit=200)
    return float(val)
