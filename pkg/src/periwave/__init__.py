"""Solitary travelling waves of the 1D bond-based peridynamic equation.

The package computes monotone travelling-wave profiles by minimizing kinetic
energy at fixed potential energy, checks them against the travelling-wave
equation and a time-domain simulation, and probes the structural conditions
(energy inequality, subadditivity, tail behaviour) behind their existence.
"""

from periwave.model import (
    HypothesisReport,
    MicroPotential,
    Side,
    VKind,
    bond_force_f,
    check_hypotheses,
    dispersion,
    eval_v,
    micro_w,
    n_ell,
    sound_speed_c0,
)
from periwave.profile import (
    Grid,
    Profile,
    bond_strain_sup,
    derivative,
    eval_at,
    monotonize,
    piecewise_linear,
    recenter,
    tanh_profile,
)
from periwave.functionals import (
    EnergyReport,
    QuadratureSpec,
    energy_report,
    grad_kinetic,
    grad_potential,
    kinetic,
    potential_density,
    potential_energy,
    rescale_to_energy,
)
from periwave.solver import (
    InitSpec,
    SolverConfig,
    WaveSolution,
    continue_in_ell,
    el_residual,
    lagrange_multiplier,
    minimize,
)
from periwave.dynamics import (
    DynState,
    PropagationReport,
    internal_force,
    simulate_travelling_wave,
    step_verlet,
)

__version__ = "0.1.0"

__all__ = [
    "HypothesisReport",
    "MicroPotential",
    "Side",
    "VKind",
    "bond_force_f",
    "check_hypotheses",
    "dispersion",
    "eval_v",
    "micro_w",
    "n_ell",
    "sound_speed_c0",
    "Grid",
    "Profile",
    "bond_strain_sup",
    "derivative",
    "eval_at",
    "monotonize",
    "piecewise_linear",
    "recenter",
    "tanh_profile",
    "EnergyReport",
    "QuadratureSpec",
    "energy_report",
    "grad_kinetic",
    "grad_potential",
    "kinetic",
    "potential_density",
    "potential_energy",
    "rescale_to_energy",
    "InitSpec",
    "SolverConfig",
    "WaveSolution",
    "continue_in_ell",
    "el_residual",
    "lagrange_multiplier",
    "minimize",
    "DynState",
    "PropagationReport",
    "internal_force",
    "simulate_travelling_wave",
    "step_verlet",
]
