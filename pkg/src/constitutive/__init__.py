# src/constitutive/__init__.py
"""
Constitutive laws

Components:
- capillary_models: capillary energy densities γ (Brooks-Corey, tabulated), phase pressures, Kirchhoff transforms, saturation map
- regularization: the ε-clamped model γ_ε
- porosity_constraint: porosity bounds, soft constraint G_ε and its inverse, mobility floor k_ε
- content_map: Φ_ε, its Jacobian, the convex potential F_ε and the projection onto K_φ
"""

from .capillary_models import (
    CapillaryKind,
    CapillaryModel,
    BrooksCoreyModel,
    TabulatedModel,
    PressurePair,
    build_capillary_model,
    gamma_eval,
    hat_pressures,
    kirchhoff_eval,
    kirchhoff_lipschitz_excess,
    saturation_from_capillary,
)
from .regularization import RegularizedFamily, RegularizedModel
from .porosity_constraint import (
    PorosityBounds,
    soft_constraint_g,
    soft_constraint_g_prime,
    soft_constraint_g_inv,
    soft_constraint_g_inv_slope,
    soft_constraint_energy,
    mobility_floor,
)
from .content_map import (
    PhaseContentPair,
    phi_from_potentials,
    phi_jacobian,
    f_eps_energy,
    project_k_phi,
)

__all__ = [
    'CapillaryKind', 'CapillaryModel', 'BrooksCoreyModel', 'TabulatedModel', 'PressurePair',
    'build_capillary_model', 'gamma_eval', 'hat_pressures', 'kirchhoff_eval', 'kirchhoff_lipschitz_excess',
    'saturation_from_capillary', 'RegularizedModel', 'RegularizedFamily', 'PorosityBounds', 'soft_constraint_g',
    'soft_constraint_g_prime', 'soft_constraint_g_inv', 'soft_constraint_g_inv_slope',
    'soft_constraint_energy', 'mobility_floor', 'PhaseContentPair', 'phi_from_potentials',
    'phi_jacobian', 'f_eps_energy', 'project_k_phi',
]
