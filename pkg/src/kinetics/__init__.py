"""Stochastic particle simulation of homogeneous inelastic kinetics.

Monte Carlo collision dynamics for dissipative gases with hard-potential
rates and grazing-heavy angular kernels, plus the quadrature and
Fourier-side machinery used to verify the collision-rate identities,
moment bounds, and characteristic-function evolution.
"""

from .dsmc import (
    BiMaxwellian,
    Maxwellian,
    ParticleEnsemble,
    PowerTail,
    SimConfig,
    SimulationResult,
    dissipation_check,
    init_ensemble,
    moments,
    run,
    step,
)
from .fourier import (
    bobylev_rhs,
    decay_profile,
    empirical_cf,
    equicontinuity_diagnostic,
    fit_gaussian_cf,
    gaussian_cf,
    kalpha_distance,
    phi_hat_n,
    probe_grid,
)
from .kernels import (
    AngularKernel,
    CutoffAngularKernel,
    KineticKernel,
    MollifiedKineticKernel,
    Restitution,
    eval_b,
    eval_bn,
    eval_phin,
    sphere_mass_bn,
)
from .povzner import (
    appendix_convexity_check,
    fit_constants,
    h_scaling_probe,
    hg_decompose,
    k_direct,
    k_transformed,
)
from .weights import WeightFunction

__version__ = "0.1.0"

__all__ = [
    "AngularKernel",
    "BiMaxwellian",
    "CutoffAngularKernel",
    "KineticKernel",
    "Maxwellian",
    "MollifiedKineticKernel",
    "ParticleEnsemble",
    "PowerTail",
    "Restitution",
    "SimConfig",
    "SimulationResult",
    "WeightFunction",
    "appendix_convexity_check",
    "bobylev_rhs",
    "decay_profile",
    "dissipation_check",
    "empirical_cf",
    "equicontinuity_diagnostic",
    "eval_b",
    "eval_bn",
    "eval_phin",
    "fit_constants",
    "fit_gaussian_cf",
    "gaussian_cf",
    "h_scaling_probe",
    "hg_decompose",
    "init_ensemble",
    "k_direct",
    "k_transformed",
    "kalpha_distance",
    "moments",
    "phi_hat_n",
    "probe_grid",
    "run",
    "sphere_mass_bn",
    "step",
]
