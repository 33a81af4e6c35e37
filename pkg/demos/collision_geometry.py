"""Tour of the elastic collision geometry.

A collision between a test particle at velocity ``z`` and a partner at
``v`` is parametrized by a polar angle ``theta`` and an azimuth ``phi``.
The transfer vector ``alpha`` moves the pair to ``z + alpha`` and
``v - alpha``, which conserves momentum by construction and kinetic
energy by the geometry of the deflection.  This script prints the
conserved quantities for a random batch, the azimuthal average of the
orthogonal frame (zero, so the mean deflection is purely longitudinal),
and the matched-frame distance bound that makes pathwise coupling
arguments work.
"""

import numpy as np

from boltzgas.geometry import (
    deflection_alpha,
    gamma,
    post_collision,
    tanaka_rotation,
)


def main():
    rng = np.random.default_rng(7)
    n = 50_000
    z = rng.normal(0.0, 1.5, (n, 3))
    v = rng.normal(0.0, 1.5, (n, 3))
    theta = rng.uniform(1e-4, np.pi, n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)

    z_post, v_post = post_collision(z, v, theta, phi)
    mom = np.abs((z_post + v_post) - (z + v)).max()
    e_pre = (z * z).sum(axis=1) + (v * v).sum(axis=1)
    e_post = (z_post**2).sum(axis=1) + (v_post**2).sum(axis=1)
    energy = (np.abs(e_post - e_pre) / e_pre).max()
    print(f"batch of {n} collisions")
    print(f"  worst momentum error     {mom:.3e}")
    print(f"  worst relative energy    {energy:.3e}")

    w = v[:200] - z[:200]
    grid = np.arange(32) * (2.0 * np.pi / 32)
    frames = gamma(np.repeat(w, 32, axis=0), np.tile(grid, 200))
    avg = np.abs(frames.reshape(200, 32, 3).mean(axis=1)).max()
    print(f"  azimuthal frame average  {avg:.3e}  (exactly zero in law)")

    alpha = deflection_alpha(z, v, theta, phi)
    cap = (
        2.0
        * theta
        * (np.linalg.norm(z, axis=1) + np.linalg.norm(v, axis=1))
    )
    print(
        "  deflection size bound    "
        f"{(np.linalg.norm(alpha, axis=1) / cap).max():.3f} of cap"
    )

    # align azimuthal frames of two nearby states; the frame distance
    # is controlled by three times the relative-velocity mismatch
    z2 = z + 0.2 * rng.standard_normal((n, 3))
    v2 = v + 0.2 * rng.standard_normal((n, 3))
    phi0 = tanaka_rotation(z, v, z2, v2)
    a1 = deflection_alpha(z, v, theta, phi)
    a2 = deflection_alpha(z2, v2, theta, phi + phi0)
    lhs = np.linalg.norm(a1 - a2, axis=1)
    rhs = 2.0 * theta * (
        np.linalg.norm(z - z2, axis=1) + np.linalg.norm(v - v2, axis=1)
    )
    print(
        "  matched-frame coupling   worst ratio "
        f"{(lhs / rhs).max():.3f} of the Lipschitz cap"
    )


if __name__ == "__main__":
    main()
