# src/__init__.py
"""
Two-phase poromechanics simulator

This package contains the separated components of the simulator:
- constitutive: capillary energies, ε-regularization, the content map Φ_ε and its potential F_ε
- femcore: meshes, P1 spaces, sparse assembly, SPD solves and dual norms
- coupled: material laws, mechanics sub-solve, initial equilibrium, weak-coupling audit
- stepper: frozen monotone system, Newton solve, fixed point, ε-continuation, transient loop
- diagnostics: energies, dissipation, energy audit, graph consistency, conservation
- scenario_io: configuration, validation, output writers and run orchestration
"""

__version__ = '1.0.0'
