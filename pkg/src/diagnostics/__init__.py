# src/diagnostics/__init__.py
"""
Diagnostics

Components:
- energies: Helmholtz energies, dissipation, Kirchhoff bounds, the EnergyLedger
- energy_audit: per-step tested-equation identity and convexity inequality
- graph: distance of (φ, χ) to the porosity-constraint graph
- conservation: content balance, V' increments, Gronwall bookkeeping
- convergence: manufactured single-phase Biot study through the step solver
"""

from .energies import (
    EnergyLedger,
    dissipation,
    helmholtz_energy,
    kirchhoff_identity_defect,
    kirchhoff_ordering_residual,
    kirchhoff_seminorms,
    regularized_content_energy,
    regularized_dissipation_bound,
    solid_energy,
    state_ledger,
)
from .energy_audit import AuditResult, StepTerms, energy_audit, regularized_free_energy
from .graph import GraphReport, graph_consistency, graph_distances, graph_report_from_values
from .conservation import (
    GronwallReport,
    MassBalance,
    content_increment_norms,
    dual_norm_increments,
    gronwall_bookkeeping,
    mass_balance,
)
from .convergence import (
    BiotParams,
    ConvergenceStudy,
    linear_biot_study,
    manufactured_biot_errors,
    manufactured_biot_step,
)

__all__ = [
    'EnergyLedger', 'dissipation', 'helmholtz_energy', 'kirchhoff_identity_defect', 'kirchhoff_ordering_residual',
    'kirchhoff_seminorms', 'regularized_content_energy', 'regularized_dissipation_bound', 'solid_energy', 'state_ledger',
    'AuditResult', 'StepTerms', 'energy_audit', 'regularized_free_energy',
    'GraphReport', 'graph_consistency', 'graph_distances', 'graph_report_from_values',
    'GronwallReport', 'MassBalance', 'content_increment_norms', 'dual_norm_increments',
    'gronwall_bookkeeping', 'mass_balance',
    'BiotParams', 'ConvergenceStudy', 'linear_biot_study', 'manufactured_biot_errors', 'manufactured_biot_step',
]
