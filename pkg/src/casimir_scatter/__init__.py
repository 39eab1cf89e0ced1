"""Casimir interaction between a dielectric nanosphere and a metallic plane.

Exact scattering-formula energies, the small-sphere and short/long distance
asymptotic models, and curve analysis (force, logarithmic slopes, ratios).
Lengths are in nm, reduced imaginary frequencies ``xi_hat = xi/c`` in 1/nm and
energies in eV unless stated otherwise.
"""

from .constants import HBAR_C_EV_NM
from .materials import (
    DrudeParams,
    SellmeierParams,
    Drude,
    Sellmeier,
    Vacuum,
    MaterialModel,
    permittivity,
    default_plane,
    default_sphere,
)
from .fresnel import FresnelPair, fresnel
from .mie import MieAmplitude, mie_amplitudes, mie_small_radius, polarizability
from .energy import (
    EnergyResult,
    Geometry,
    NumericsSpec,
    casimir_energy_exact,
    casimir_energy_perturbative,
    log_det_contribution,
)

__version__ = "0.1.0"

__all__ = [
    "HBAR_C_EV_NM",
    "DrudeParams",
    "SellmeierParams",
    "Drude",
    "Sellmeier",
    "Vacuum",
    "MaterialModel",
    "permittivity",
    "default_plane",
    "default_sphere",
    "FresnelPair",
    "fresnel",
    "MieAmplitude",
    "mie_amplitudes",
    "mie_small_radius",
    "polarizability",
    "Geometry",
    "NumericsSpec",
    "EnergyResult",
    "casimir_energy_exact",
    "casimir_energy_perturbative",
    "log_det_contribution",
]
