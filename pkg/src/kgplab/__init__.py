"""Numerical laboratory for the 2D Kirchhoff-Gross-Pitaevskii minimization
with the attractive singular well -|x|^(-p), 0 < p < 2."""

__version__ = "0.1.0"

from .energy import (
    EnergyBreakdown,
    ModelParams,
    blowup_scale_limit,
    critical_energy_limit,
    energy,
    supercritical_energy_limit,
    trial_energy,
    upper_bound,
)
from .flow import FlowOptions, MinimizeResult, el_gradient, el_residual, minimize, monotone_check
from .radial import (
    RadialFunction,
    RadialGrid,
    gaussian_profile,
    h1_distance,
    kinetic,
    mass,
    normalize_profile,
    quartic,
    rescale_profile,
    singular_moment,
)
from .sweep import LimitFit, SweepRecord, estimate_limit, profile_convergence, run_sweep
from .townes import GroundStateData, gn_defect, moment, shoot_q

__all__ = [
    "EnergyBreakdown",
    "FlowOptions",
    "GroundStateData",
    "LimitFit",
    "MinimizeResult",
    "ModelParams",
    "RadialFunction",
    "RadialGrid",
    "SweepRecord",
    "blowup_scale_limit",
    "critical_energy_limit",
    "el_gradient",
    "el_residual",
    "energy",
    "estimate_limit",
    "gaussian_profile",
    "gn_defect",
    "h1_distance",
    "kinetic",
    "mass",
    "normalize_profile",
    "minimize",
    "moment",
    "monotone_check",
    "profile_convergence",
    "quartic",
    "rescale_profile",
    "run_sweep",
    "shoot_q",
    "singular_moment",
    "supercritical_energy_limit",
    "trial_energy",
    "upper_bound",
]
