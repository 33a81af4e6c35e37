"""Elastic collision kinematics in three dimensions.

A binary collision between a test particle with velocity ``z`` and a
partner with velocity ``v`` is parametrized by a polar angle ``theta``
and an azimuth ``phi``.  The velocity transfer is

    alpha(z, v, theta, phi) = sin^2(theta/2) * (v - z)
                              + (sin(theta) / 2) * Gamma(v - z, phi)

where ``Gamma(w, phi) = I(w) cos(phi) + J(w) sin(phi)`` and
``(w, I(w), J(w))`` is an orthogonal triple with ``|I| = |J| = |w|``.
Post-collision velocities are ``z + alpha`` and ``v - alpha``; momentum
and kinetic energy are conserved exactly and the relative speed
``|v - z|`` is invariant.

All functions accept either single vectors of shape ``(3,)`` or batches
of shape ``(n, 3)`` (angles broadcast accordingly) and operate in float64.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "Frame",
    "orthonormal_frame",
    "gamma",
    "deflection_alpha",
    "post_collision",
    "tanaka_rotation",
]


class Frame(NamedTuple):
    """Orthogonal triple attached to a relative velocity ``w``.

    ``i_axis`` and ``j_axis`` are orthogonal to ``w`` and to each other,
    both with norm ``|w|``, and ``(w/|w|, i_axis/|w|, j_axis/|w|)`` is
    right-handed.  For ``w = 0`` both axes are zero vectors.
    """

    i_axis: np.ndarray
    j_axis: np.ndarray


def _as_vectors(*arrays):
    """Promote inputs to 2-d float64 arrays of shape (n, 3).

    Returns the promoted arrays plus a flag telling whether every input
    was a single vector, so results can be squeezed back.
    """
    promoted = []
    scalar = True
    for a in arrays:
        a = np.asarray(a, dtype=np.float64)
        if a.ndim == 1:
            a = a[np.newaxis, :]
        else:
            scalar = False
        if a.shape[-1] != 3:
            raise ValueError(f"expected 3-vectors, got shape {a.shape}")
        promoted.append(a)
    n = max(a.shape[0] for a in promoted)
    promoted = [np.broadcast_to(a, (n, 3)) for a in promoted]
    return promoted, scalar


def _check_finite(name, a):
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")


def orthonormal_frame(w):
    """Deterministic orthogonal frame attached to ``w``.

    The convention is frozen so that downstream event logs are
    reproducible: pick the coordinate axis ``e_k`` with the smallest
    ``|w_k|`` (smallest index on ties), set ``I = (w x e_k)`` rescaled
    to norm ``|w|``, and ``J = (w/|w|) x I``.

    Parameters
    ----------
    w : array_like, shape (3,) or (n, 3)
        Relative velocity vector(s).

    Returns
    -------
    Frame
        ``i_axis`` and ``j_axis`` with the same shape as ``w``.  Both
        are zero for ``w = 0``.

    Raises
    ------
    ValueError
        If ``w`` contains NaN or infinity.
    """
    (w_,), scalar = _as_vectors(w)
    _check_finite("w", w_)
    n = w_.shape[0]

    norm = np.linalg.norm(w_, axis=1)
    # Axis of smallest |component|, ties resolved toward the smaller index.
    k = np.argmin(np.abs(w_), axis=1)
    e = np.zeros((n, 3))
    e[np.arange(n), k] = 1.0

    i_raw = np.cross(w_, e)
    i_norm = np.linalg.norm(i_raw, axis=1)
    nonzero = norm > 0.0
    scale = np.zeros(n)
    scale[nonzero] = norm[nonzero] / i_norm[nonzero]
    i_axis = i_raw * scale[:, np.newaxis]

    w_hat = np.zeros_like(w_)
    w_hat[nonzero] = w_[nonzero] / norm[nonzero, np.newaxis]
    j_axis = np.cross(w_hat, i_axis)

    if scalar:
        return Frame(i_axis[0], j_axis[0])
    return Frame(i_axis, j_axis)


def gamma(w, phi):
    """Azimuthal component ``Gamma(w, phi) = I(w) cos(phi) + J(w) sin(phi)``.

    ``Gamma`` is orthogonal to ``w`` with ``|Gamma| = |w|``, and its
    average over a full turn of ``phi`` vanishes.

    Parameters
    ----------
    w : array_like, shape (3,) or (n, 3)
        Relative velocity vector(s).
    phi : float or array_like
        Azimuth in radians.

    Returns
    -------
    numpy.ndarray
        Same leading shape as the broadcast inputs.
    """
    (w_,), scalar_w = _as_vectors(w)
    phi_ = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    frame = orthonormal_frame(w_)
    out = (
        frame.i_axis * np.cos(phi_)[:, np.newaxis]
        + frame.j_axis * np.sin(phi_)[:, np.newaxis]
    )
    if scalar_w and np.isscalar(phi) or (scalar_w and phi_.shape == (1,)):
        return out[0] if out.shape[0] == 1 else out
    return out


def deflection_alpha(z, v, theta, phi):
    """Velocity transfer of a binary elastic collision.

    Computes ``sin^2(theta/2) (v - z) + (sin(theta)/2) Gamma(v - z, phi)``.
    The transfer has norm ``|v - z| sin(theta/2)`` and satisfies
    ``|alpha| <= 2 theta (|z| + |v|)``.

    Parameters
    ----------
    z, v : array_like, shape (3,) or (n, 3)
        Test and partner velocities.
    theta : float or array_like
        Polar angle in (0, pi].
    phi : float or array_like
        Azimuth in [0, 2*pi).

    Returns
    -------
    numpy.ndarray
        The transfer ``alpha``, shape matching the broadcast inputs.
    """
    (z_, v_), scalar = _as_vectors(z, v)
    theta_ = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    phi_ = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    _check_finite("z", z_)
    _check_finite("v", v_)

    w = v_ - z_
    half = 0.5 * theta_
    s2 = np.sin(half) ** 2
    g = gamma(w, phi_)
    if g.ndim == 1:
        g = g[np.newaxis, :]
    alpha = s2[:, np.newaxis] * w + (0.5 * np.sin(theta_))[:, np.newaxis] * g
    if scalar and alpha.shape[0] == 1:
        return alpha[0]
    return alpha


def post_collision(z, v, theta, phi):
    """Post-collision velocity pair ``(z + alpha, v - alpha)``.

    Returns
    -------
    tuple of numpy.ndarray
        ``(z_star, v_star)``.  Momentum ``z + v`` and energy
        ``|z|^2 + |v|^2`` are conserved exactly up to roundoff.
    """
    alpha = deflection_alpha(z, v, theta, phi)
    z_ = np.asarray(z, dtype=np.float64)
    v_ = np.asarray(v, dtype=np.float64)
    return z_ + alpha, v_ - alpha


def _rotation_between(a_hat, b_hat, fallback_axis):
    """Rotation matrices taking unit vectors ``a_hat`` onto ``b_hat``.

    Uses the minimal (geodesic) rotation via the Rodrigues formula.  For
    antiparallel pairs the rotation axis is ill-defined; ``fallback_axis``
    (unit, orthogonal to ``a_hat``) breaks the tie with a half-turn.
    """
    n = a_hat.shape[0]
    c = np.einsum("ij,ij->i", a_hat, b_hat)
    axis = np.cross(a_hat, b_hat)
    s = np.linalg.norm(axis, axis=1)

    rot = np.empty((n, 3, 3))
    # Generic case: Rodrigues with axis = a x b, angle where cos = c, sin = s.
    generic = s > 1e-12
    if np.any(generic):
        k = axis[generic] / s[generic, np.newaxis]
        kx, ky, kz = k[:, 0], k[:, 1], k[:, 2]
        zeros = np.zeros_like(kx)
        cross_k = np.stack(
            [
                np.stack([zeros, -kz, ky], axis=-1),
                np.stack([kz, zeros, -kx], axis=-1),
                np.stack([-ky, kx, zeros], axis=-1),
            ],
            axis=-2,
        )
        cg = c[generic, np.newaxis, np.newaxis]
        sg = s[generic, np.newaxis, np.newaxis]
        kkt = k[:, :, np.newaxis] * k[:, np.newaxis, :]
        rot[generic] = cg * np.eye(3) + sg * cross_k + (1.0 - cg) * kkt

    aligned = (~generic) & (c > 0.0)
    rot[aligned] = np.eye(3)

    anti = (~generic) & (c <= 0.0)
    if np.any(anti):
        # Half-turn about the fallback axis.
        u = fallback_axis[anti]
        rot[anti] = 2.0 * u[:, :, np.newaxis] * u[:, np.newaxis, :] - np.eye(3)
    return rot


def tanaka_rotation(z, v, z2, v2):
    """Azimuth offset aligning the frames of two relative velocities.

    Returns ``phi0`` in ``[0, 2*pi)`` such that for every ``phi``

        |Gamma(v - z, phi) - Gamma(v2 - z2, phi + phi0)|
            <= 3 |(v - z) - (v2 - z2)|.

    The construction rotates the frame of ``w = v - z`` onto the frame of
    ``w2 = v2 - z2`` by the minimal rotation taking ``w/|w|`` to
    ``w2/|w2|`` and reads off the in-plane angle between the transported
    ``I`` axis and the canonical frame of ``w2``.

    Degenerate inputs (either relative velocity zero) return ``0.0``.

    Parameters
    ----------
    z, v : array_like, shape (3,) or (n, 3)
        First velocity pair.
    z2, v2 : array_like, shape (3,) or (n, 3)
        Second velocity pair.

    Returns
    -------
    float or numpy.ndarray
        Offset angle(s) in ``[0, 2*pi)``.
    """
    (z_, v_, z2_, v2_), scalar = _as_vectors(z, v, z2, v2)
    for name, a in (("z", z_), ("v", v_), ("z2", z2_), ("v2", v2_)):
        _check_finite(name, a)

    w = v_ - z_
    w2 = v2_ - z2_
    n1 = np.linalg.norm(w, axis=1)
    n2 = np.linalg.norm(w2, axis=1)
    ok = (n1 > 0.0) & (n2 > 0.0)

    phi0 = np.zeros(w.shape[0])
    if np.any(ok):
        wa = w[ok] / n1[ok, np.newaxis]
        wb = w2[ok] / n2[ok, np.newaxis]
        frame_a = orthonormal_frame(w[ok])
        frame_b = orthonormal_frame(w2[ok])
        ia = frame_a.i_axis / n1[ok, np.newaxis]
        ib = frame_b.i_axis / n2[ok, np.newaxis]
        jb = frame_b.j_axis / n2[ok, np.newaxis]
        rot = _rotation_between(wa, wb, ia)
        ia_rot = np.einsum("nij,nj->ni", rot, ia)
        ang = np.arctan2(
            np.einsum("ij,ij->i", ia_rot, jb),
            np.einsum("ij,ij->i", ia_rot, ib),
        )
        wrapped = np.mod(ang, 2.0 * np.pi)
        # a negative angle within rounding of zero folds to 2*pi itself,
        # which sits outside the half-open range contract
        wrapped[wrapped >= 2.0 * np.pi] = 0.0
        phi0[ok] = wrapped

    if scalar:
        return float(phi0[0])
    return phi0
