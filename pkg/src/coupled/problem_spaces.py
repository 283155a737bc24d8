# src/coupled/problem_spaces.py
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from src.femcore import (
    BoundaryPartition,
    FeSpace,
    Mesh,
    SpaceKind,
    assemble,
    cell_average_matrix,
    divergence_per_cell,
)


@dataclass(frozen=True, eq=False)
class ProblemSpaces:
    """Spaces of one scenario and the geometry-only operators shared by every step"""

    mesh: Mesh
    flow_partition: BoundaryPartition
    mechanics_partition: BoundaryPartition

    @cached_property
    def pressure(self) -> FeSpace:
        return FeSpace(self.mesh, SpaceKind.SCALAR_DIRICHLET0, self.flow_partition)

    @cached_property
    def displacement(self) -> FeSpace:
        return FeSpace(self.mesh, SpaceKind.VECTOR_DIRICHLET0, self.mechanics_partition)

    @cached_property
    def cells(self) -> FeSpace:
        return FeSpace(self.mesh, SpaceKind.CELLWISE)

    @cached_property
    def scalar(self) -> FeSpace:
        return FeSpace(self.mesh, SpaceKind.SCALAR_H1)

    @property
    def pure_neumann_flow(self) -> bool:
        return self.pressure.constrained_dofs.size == 0

    @cached_property
    def cell_average(self) -> sp.csr_matrix:
        return cell_average_matrix(self.scalar)

    @cached_property
    def divergence(self) -> sp.csr_matrix:
        return divergence_per_cell(self.displacement)

    @cached_property
    def unit_stiffness(self):
        return assemble("stiffness", self.pressure)

    @cached_property
    def pressure_mass(self):
        return assemble("mass", self.pressure)

    @property
    def volumes(self) -> np.ndarray:
        return self.mesh.cell_volumes

    def lift_to_nodes(self, cell_values: np.ndarray) -> np.ndarray:
        """Mass-lumped L² projection of a cellwise field onto P1"""
        weighted = self.cell_average.T @ (self.volumes * np.asarray(cell_values, dtype=float))
        return weighted / self.mesh.lumped_vertex_measure

    def cell_means(self, nodal: np.ndarray) -> np.ndarray:
        return self.cell_average @ np.asarray(nodal, dtype=float)


def build_problem_spaces(mesh: Mesh, flow_dirichlet: Iterable[str],
                         mechanics_dirichlet: Iterable[str]) -> ProblemSpaces:
    return ProblemSpaces(
        mesh,
        BoundaryPartition(frozenset(flow_dirichlet)),
        BoundaryPartition(frozenset(mechanics_dirichlet)),
    )
