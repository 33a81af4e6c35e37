"""What the velocity truncation does and how often it matters.

Jump coefficients are made globally Lipschitz by projecting the test
particle toward a ball of radius ``j`` before computing the transfer.
Inside the ball nothing changes; outside, the projection caps the
effective speed and breaks exact energy conservation by a quantified
defect.  The script shows the projection caps, then measures how often
trajectories actually leave balls of increasing radius, together with
the pathwise bound on those exit probabilities.
"""

import numpy as np

from boltzgas.densities import BoxMaxwellianModel
from boltzgas.diagnostics import exit_statistics
from boltzgas.engine import SimConfig, simulate_ensemble
from boltzgas.kernels import HARD_SPHERE, KernelSpec
from boltzgas.truncation import energy_defect, project_j


def main():
    rng = np.random.default_rng(11)
    z = rng.normal(0.0, 4.0, (6, 3))
    print("projection toward the ball of radius j = 3")
    print("     |z|      |proj|   defect of one collision")
    v = rng.normal(0.0, 1.0, (6, 3))
    theta = rng.uniform(0.1, np.pi, 6)
    phi = rng.uniform(0.0, 2.0 * np.pi, 6)
    proj = project_j(z, 3.0)
    defect = energy_defect(z, v, theta, phi, 3.0)
    for i in range(6):
        print(
            f"  {np.linalg.norm(z[i]):7.3f}  {np.linalg.norm(proj[i]):7.3f}"
            f"   {defect[i]:+.3e}"
        )
    print("(the defect vanishes whenever |z| <= j)")

    box = BoxMaxwellianModel(side=1.0, vel_var=1.0)
    kernel = KernelSpec(gamma=1.0, c=1.0, angular=HARD_SPHERE)
    cfg = SimConfig(horizon=0.5, level=2.0, escalate=True)
    trajs, _ = simulate_ensemble(box, kernel, cfg, 303, 2000)
    sups = np.array([tr.max_speed() for tr in trajs])
    rep = exit_statistics(sups, thresholds=(2.0, 3.0, 4.0, 6.0))
    print("\nball exits over 2000 escalating paths, horizon 0.5")
    print("   radius   P(exit)   mean-sup bound")
    for j, p, b in zip(rep.thresholds, rep.probabilities, rep.markov_bounds):
        print(f"   {j:5.1f}   {p:7.4f}   {b:7.4f}")
    print(f"mean running sup of |Z|: {rep.mean_sup:.3f}")
    print("exit gets rarer as the ball grows, so a fixed level only")
    print("affects the rare excursions beyond it")


if __name__ == "__main__":
    main()
