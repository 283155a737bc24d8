# src/coupled/__init__.py
"""
Physics-level coupling

Components:
- material: MaterialParams, permeability laws, body force
- problem_spaces: the pressure/displacement/cell spaces of a scenario
- state: the state tuple X with multiplier and pressures
- mechanics: mechanics sub-solve and equilibrium initial state
- weak_coupling: sampled estimate of C₁ and the weak coupling verdict
"""

from .material import (
    MaterialParams,
    PermeabilityLaw,
    body_force,
    gravity_potential,
    permeability,
    permeability_tensor,
)
from .problem_spaces import ProblemSpaces, build_problem_spaces
from .state import State
from .mechanics import MechanicsSystem, equilibrium_pressures, init_state, solve_mechanics
from .weak_coupling import WeakCouplingReport, weak_coupling_audit

__all__ = [
    'MaterialParams', 'PermeabilityLaw', 'body_force', 'gravity_potential', 'permeability',
    'permeability_tensor', 'ProblemSpaces', 'build_problem_spaces', 'State', 'MechanicsSystem',
    'equilibrium_pressures', 'init_state', 'solve_mechanics', 'WeakCouplingReport', 'weak_coupling_audit',
]
