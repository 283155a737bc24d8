# src/femcore/__init__.py
"""
Finite-element core

Components:
- mesh: interval and rectangle meshes, boundary partitions, plain-text mesh format
- spaces: P1 and cellwise spaces with Dirichlet-constrained dofs, coefficient fields
- assembly: mass, stiffness, elasticity, divergence coupling and load forms
- solvers: SPD solves, V' dual norms, coercivity estimates
"""

from .mesh import BoundaryPartition, Mesh, MeshSpec, generate_mesh, read_mesh, write_mesh
from .spaces import FeSpace, Field, SpaceKind, require_same_mesh
from .assembly import (
    AssemblyKind,
    SparseOperator,
    assemble,
    cell_average_matrix,
    divergence_per_cell,
    vector_laplacian_matrix,
)
from .solvers import (
    coercivity_constant,
    dual_norm_vprime,
    positivity_probe,
    solve_sparse,
    solve_spd,
)

__all__ = [
    'BoundaryPartition', 'Mesh', 'MeshSpec', 'generate_mesh', 'read_mesh', 'write_mesh',
    'FeSpace', 'Field', 'SpaceKind', 'require_same_mesh',
    'AssemblyKind', 'SparseOperator', 'assemble', 'cell_average_matrix', 'divergence_per_cell',
    'vector_laplacian_matrix',
    'coercivity_constant', 'dual_norm_vprime', 'positivity_probe', 'solve_sparse', 'solve_spd',
]
