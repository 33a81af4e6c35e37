"""Monte Carlo simulation of a tagged particle in a dilute gas.

The package builds up, layer by layer, the stochastic jump process whose
velocity distribution follows the spatially inhomogeneous Boltzmann
dynamics against a prescribed background density:

* :mod:`boltzgas.geometry` -- scattering kinematics and frame alignment,
* :mod:`boltzgas.kernels` -- collision kernels and angular measures,
* :mod:`boltzgas.truncation` -- velocity-space cutoffs with bounded rates,
* :mod:`boltzgas.densities` -- background density models and certified bounds,
* :mod:`boltzgas.quadrature` -- the deterministic integration toolbox,
* :mod:`boltzgas.engine` -- the exact-thinning jump-process simulator,
* :mod:`boltzgas.picard` -- iteration of trajectories on frozen noise,
* :mod:`boltzgas.particles` -- interacting ensembles with mollified rates,
* :mod:`boltzgas.diagnostics` -- weak-form residuals, moments and entropy,
* :mod:`boltzgas.config` -- validated run configurations,
* :mod:`boltzgas.runio` -- deterministic file formats for run outputs,
* :mod:`boltzgas.cli` -- the ``boltzgas`` command-line runner.
"""

from .geometry import (
    Frame,
    deflection_alpha,
    gamma,
    orthonormal_frame,
    post_collision,
    tanaka_rotation,
)
from .kernels import (
    HARD_SPHERE,
    POWER_LAW,
    KernelSpec,
    angular_mass,
    angular_weighted_mass,
    sample_theta,
    sigma,
    theta_first_moment,
)
from .truncation import alpha_j, energy_defect, project_j, sigma_j
from .densities import (
    BKWModel,
    BoxMaxwellianModel,
    CertificationReport,
    DensityModel,
    GaussianProductModel,
    MollifiedEmpiricalModel,
    bkw_fourth_moment,
    bkw_relaxation_rate,
    certify_hypotheses,
    maxwell_abs_moment,
)
from .rng import stream
from .engine import (
    CandidateRecord,
    EnvelopeError,
    EventLog,
    SimConfig,
    Trajectory,
    majorant_rate,
    simulate,
    simulate_ensemble,
)
from .picard import (
    ContractionReport,
    FrozenNoise,
    PicardPath,
    contraction_profile,
    frozen_noise,
    initial_iterate,
    picard_iterates,
    picard_pass,
    supremum_distance,
)
from .particles import (
    ParticleEnsemble,
    default_bandwidths,
    ensemble_energy_rate,
    evolve_ensemble,
    maxwellian_ensemble,
    step_ensemble,
)
from .diagnostics import (
    CompactBump,
    Constant,
    Energy,
    EntropyReport,
    ExitReport,
    LinearMomentum,
    MomentTable,
    Quadratic,
    ResidualReport,
    TestFunction,
    collision_action,
    collision_invariant_residual,
    collision_symmetry_gap,
    energy_flow_values,
    energy_rhs_report,
    entropy_bias_budget,
    exit_statistics,
    gaussian_kl,
    moment_report,
    relative_entropy_kde,
    weak_residual,
)

__version__ = "0.1.0"

__all__ = [
    "Frame",
    "deflection_alpha",
    "gamma",
    "orthonormal_frame",
    "post_collision",
    "tanaka_rotation",
    "HARD_SPHERE",
    "POWER_LAW",
    "KernelSpec",
    "angular_mass",
    "angular_weighted_mass",
    "sample_theta",
    "sigma",
    "theta_first_moment",
    "alpha_j",
    "energy_defect",
    "project_j",
    "sigma_j",
    "BKWModel",
    "BoxMaxwellianModel",
    "CertificationReport",
    "DensityModel",
    "GaussianProductModel",
    "MollifiedEmpiricalModel",
    "bkw_fourth_moment",
    "bkw_relaxation_rate",
    "certify_hypotheses",
    "maxwell_abs_moment",
    "stream",
    "SimConfig",
    "CandidateRecord",
    "EventLog",
    "Trajectory",
    "EnvelopeError",
    "majorant_rate",
    "simulate",
    "simulate_ensemble",
    "FrozenNoise",
    "PicardPath",
    "frozen_noise",
    "initial_iterate",
    "picard_pass",
    "picard_iterates",
    "supremum_distance",
    "ContractionReport",
    "contraction_profile",
    "ParticleEnsemble",
    "default_bandwidths",
    "maxwellian_ensemble",
    "step_ensemble",
    "evolve_ensemble",
    "ensemble_energy_rate",
    "TestFunction",
    "Constant",
    "LinearMomentum",
    "Energy",
    "Quadratic",
    "CompactBump",
    "ResidualReport",
    "collision_action",
    "collision_invariant_residual",
    "energy_flow_values",
    "energy_rhs_report",
    "weak_residual",
    "collision_symmetry_gap",
    "EntropyReport",
    "gaussian_kl",
    "entropy_bias_budget",
    "relative_entropy_kde",
    "ExitReport",
    "exit_statistics",
    "MomentTable",
    "moment_report",
    "__version__",
]
