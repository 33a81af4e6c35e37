"""Velocity-space localization of the collision dynamics.

The jump coefficients become globally Lipschitz once the test particle
velocity is projected toward the closed ball of radius ``j``:

    project_j(z, j) = z / (1 + d(z, B_j)),   d(z, B_j) = max(|z| - j, 0).

The projected speed never exceeds ``min(j, |z|)`` (this requires
``j >= 1``), the map is the identity on ``|z| <= j``, and it is globally
Lipschitz.  The localized transfer and cross section are

    alpha_j(z, v, theta, phi) = alpha(project_j(z), v, theta, phi)
    sigma_j(z, v) = sigma(|project_j(z) - v|).

Localization breaks exact energy conservation outside the ball; the
defect in the post-collision energy balance is

    |z + alpha_j|^2 - |z|^2 = |v|^2 - |v - alpha_j|^2 + E_j,
    E_j = (2 d / (1 + d)) <z, alpha_j>,

which vanishes on ``|z| <= j``.
"""

from __future__ import annotations

import numpy as np

from .geometry import deflection_alpha
from .kernels import sigma

__all__ = ["project_j", "alpha_j", "sigma_j", "energy_defect"]


def _validate_level(j):
    j = np.asarray(j, dtype=np.float64)
    if not np.all(np.isfinite(j)) or np.any(j < 1.0):
        raise ValueError(f"truncation level must be a finite real >= 1, got {j}")
    if j.ndim == 0:
        return float(j)
    return j


def project_j(z, j):
    """Project ``z`` toward the ball of radius ``j``.

    Parameters
    ----------
    z : array_like, shape (3,) or (n, 3)
        Velocity vector(s).
    j : float or array_like
        Truncation level(s), ``>= 1``; either one level for every row
        or one level per row.

    Returns
    -------
    numpy.ndarray
        ``z / (1 + max(|z| - j, 0))``; bitwise equal to ``z`` on
        ``|z| <= j``, with norm at most ``min(j, |z|)`` otherwise.
    """
    j = _validate_level(j)
    z_ = np.asarray(z, dtype=np.float64)
    single = z_.ndim == 1
    z2 = np.atleast_2d(z_)
    norm = np.linalg.norm(z2, axis=1)
    d = np.maximum(norm - j, 0.0)
    out = np.where(d[:, np.newaxis] > 0.0, z2 / (1.0 + d)[:, np.newaxis], z2)
    return out[0] if single else out


def alpha_j(z, v, theta, phi, j):
    """Localized velocity transfer ``alpha(project_j(z), v, theta, phi)``.

    Equals the untruncated transfer whenever ``|z| <= j``.
    """
    return deflection_alpha(project_j(z, j), v, theta, phi)


def sigma_j(spec, z, v, j):
    """Localized cross section ``sigma(|project_j(z) - v|)``.

    Bounded by ``c * (j + |v|)**gamma`` for ``gamma >= 0`` uniformly in
    ``z``, which is what makes thinning majorants finite.

    Parameters
    ----------
    spec : kernels.KernelSpec
    z, v : array_like, shape (3,) or (n, 3)
    j : float
        Truncation level, ``>= 1``.

    Returns
    -------
    float or numpy.ndarray
    """
    p = project_j(z, j)
    v_ = np.asarray(v, dtype=np.float64)
    r = np.linalg.norm(p - v_, axis=-1)
    return sigma(spec, r)


def energy_defect(z, v, theta, phi, j):
    """Energy-balance defect ``E_j`` of a localized collision.

    Computed from the closed form ``(2 d / (1 + d)) <z, alpha_j>`` with
    ``d = max(|z| - j, 0)``; exactly zero on ``|z| <= j``.

    Returns
    -------
    float or numpy.ndarray
    """
    j = _validate_level(j)
    z_ = np.asarray(z, dtype=np.float64)
    a = alpha_j(z_, v, theta, phi, j)
    norm = np.linalg.norm(z_, axis=-1)
    d = np.maximum(norm - j, 0.0)
    dot = np.sum(z_ * a, axis=-1)
    return (2.0 * d / (1.0 + d)) * dot
