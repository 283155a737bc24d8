# src/femcore/spaces.py
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

from src.utils.errors import SpaceMismatchError
from .mesh import BoundaryPartition, Mesh


class SpaceKind(str, Enum):
    SCALAR_H1 = "scalar-h1"
    SCALAR_DIRICHLET0 = "scalar-h1-dirichlet0"
    VECTOR_DIRICHLET0 = "vector-h1-dirichlet0"
    CELLWISE = "cellwise-l2"


@dataclass(frozen=True, eq=False)
class FeSpace:
    """P1 (or cellwise P0) space on a mesh.

    Vector dofs are blocked by component: dof = component * n_vertices + vertex.
    """

    mesh: Mesh
    kind: SpaceKind
    partition: BoundaryPartition = field(default_factory=BoundaryPartition)

    @property
    def components(self) -> int:
        return self.mesh.dim if self.kind == SpaceKind.VECTOR_DIRICHLET0 else 1

    @property
    def is_nodal(self) -> bool:
        return self.kind != SpaceKind.CELLWISE

    @property
    def n_dofs(self) -> int:
        if self.kind == SpaceKind.CELLWISE:
            return self.mesh.n_cells
        return self.components * self.mesh.n_vertices

    def dof(self, vertex, component: int = 0):
        return component * self.mesh.n_vertices + np.asarray(vertex)

    @cached_property
    def dirichlet_vertices(self) -> np.ndarray:
        if self.kind in (SpaceKind.SCALAR_H1, SpaceKind.CELLWISE):
            return np.empty(0, dtype=int)
        return self.mesh.boundary_vertices(self.partition.dirichlet)

    @cached_property
    def constrained_dofs(self) -> np.ndarray:
        verts = self.dirichlet_vertices
        return np.concatenate([self.dof(verts, c) for c in range(self.components)]).astype(int)

    @cached_property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.constrained_dofs] = False
        return np.flatnonzero(mask)

    @property
    def n_free(self) -> int:
        return self.free_dofs.size

    def expand(self, free_values: np.ndarray, lifting: Optional[np.ndarray] = None) -> np.ndarray:
        """Full coefficient vector from free values plus Dirichlet values"""
        full = np.zeros(self.n_dofs) if lifting is None else np.array(lifting, dtype=float, copy=True)
        full[self.free_dofs] = free_values
        return full

    def components_of(self, values: np.ndarray) -> np.ndarray:
        """Vector coefficients as an (n_vertices, d) array"""
        return np.asarray(values).reshape(self.components, self.mesh.n_vertices).T

    def from_components(self, nodal: np.ndarray) -> np.ndarray:
        return np.asarray(nodal, dtype=float).T.reshape(-1)

    def same_mesh(self, other: "FeSpace") -> bool:
        return self.mesh is other.mesh


@dataclass
class Field:
    space: FeSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.n_dofs,):
            raise SpaceMismatchError(
                f"field of length {self.values.shape} does not match space with {self.space.n_dofs} dofs"
            )

    @classmethod
    def zeros(cls, space: FeSpace) -> "Field":
        return cls(space, np.zeros(space.n_dofs))

    def free_values(self) -> np.ndarray:
        return self.values[self.space.free_dofs]

    def dirichlet_values(self) -> np.ndarray:
        return self.values[self.space.constrained_dofs]


def require_same_mesh(*spaces: FeSpace) -> Mesh:
    mesh = spaces[0].mesh
    for space in spaces[1:]:
        if space.mesh is not mesh:
            raise SpaceMismatchError("spaces live on different meshes")
    return mesh
