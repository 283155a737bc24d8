# src/femcore/mesh.py
"""
Simplicial meshes of intervals and rectangles, plus the plain-text mesh format.

Text format (whitespace separated ASCII):
    dim nv nc nbf
    nv vertex lines      x [y]
    nc cell lines        v0 ... vd
    nbf facet lines      v1 ... vd tag     (tag in {D, N})
"""
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import FrozenSet, Iterable, List, Tuple, Union

import numpy as np

from src.utils.errors import MeshError

INTERVAL = "interval"
RECTANGLE = "rectangle"


@dataclass(frozen=True)
class MeshSpec:
    kind: str
    n: int = 1
    nx: int = 1
    ny: int = 1
    extent: Tuple[float, ...] = (0.0, 1.0, 0.0, 1.0)

    def __post_init__(self):
        if self.kind not in (INTERVAL, RECTANGLE):
            raise MeshError(f"unknown mesh kind '{self.kind}' (expected {INTERVAL} or {RECTANGLE})")
        counts = (self.n,) if self.kind == INTERVAL else (self.nx, self.ny)
        if any(int(c) != c or c < 1 for c in counts):
            raise MeshError(f"cell counts must be integers >= 1, got {counts}")
        needed = 2 if self.kind == INTERVAL else 4
        if len(self.extent) < needed:
            raise MeshError(f"{self.kind} extent needs {needed} numbers")
        if self.extent[1] <= self.extent[0] or (needed == 4 and self.extent[3] <= self.extent[2]):
            raise MeshError(f"degenerate extent {self.extent}")


@dataclass(frozen=True)
class BoundaryPartition:
    """Which boundary markers carry Dirichlet conditions; the rest are Neumann"""

    dirichlet: FrozenSet[str] = field(default_factory=frozenset)

    def tags(self, mesh: "Mesh") -> List[str]:
        return ["D" if marker in self.dirichlet else "N" for marker in mesh.facet_markers]

    def dirichlet_measure(self, mesh: "Mesh") -> float:
        mask = np.array([m in self.dirichlet for m in mesh.facet_markers], dtype=bool)
        return float(mesh.facet_measures[mask].sum())


@dataclass(frozen=True, eq=False)
class Mesh:
    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_facets: np.ndarray
    facet_markers: Tuple[str, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise MeshError(f"only 1D and 2D meshes are supported, got dim={self.dim}")
        if self.vertices.shape[1] != self.dim or self.cells.shape[1] != self.dim + 1:
            raise MeshError("vertex/cell arrays do not match the mesh dimension")
        if self.boundary_facets.shape[0] != len(self.facet_markers):
            raise MeshError("every boundary facet needs exactly one marker")
        if self.cells.min() < 0 or self.cells.max() >= self.n_vertices:
            raise MeshError("cell connectivity references missing vertices")
        for array in (self.vertices, self.cells, self.boundary_facets):
            array.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @cached_property
    def _jacobians(self) -> np.ndarray:
        corners = self.vertices[self.cells]
        return np.transpose(corners[:, 1:, :] - corners[:, :1, :], (0, 2, 1))

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        jac = self._jacobians
        if self.dim == 1:
            volumes = np.abs(jac[:, 0, 0])
        else:
            volumes = 0.5 * np.abs(np.linalg.det(jac))
        if np.any(volumes <= 0):
            raise MeshError("degenerate cell with zero volume")
        return volumes

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """Gradients of the barycentric coordinates, shape (nc, d+1, d)"""
        inv = np.linalg.inv(self._jacobians)
        grads = np.empty((self.n_cells, self.dim + 1, self.dim))
        grads[:, 1:, :] = inv
        grads[:, 0, :] = -inv.sum(axis=1)
        return grads

    @cached_property
    def barycenters(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    @cached_property
    def lumped_vertex_measure(self) -> np.ndarray:
        measure = np.zeros(self.n_vertices)
        np.add.at(measure, self.cells.ravel(), np.repeat(self.cell_volumes / (self.dim + 1), self.dim + 1))
        return measure

    @cached_property
    def facet_measures(self) -> np.ndarray:
        if self.dim == 1:
            return np.ones(self.boundary_facets.shape[0])
        ends = self.vertices[self.boundary_facets]
        return np.linalg.norm(ends[:, 1, :] - ends[:, 0, :], axis=1)

    @property
    def total_volume(self) -> float:
        return float(self.cell_volumes.sum())

    @property
    def markers(self) -> FrozenSet[str]:
        return frozenset(self.facet_markers)

    def boundary_vertices(self, markers: Iterable[str]) -> np.ndarray:
        markers = set(markers)
        mask = np.array([m in markers for m in self.facet_markers], dtype=bool)
        if not mask.any():
            return np.empty(0, dtype=int)
        return np.unique(self.boundary_facets[mask].ravel())

    def mesh_size(self) -> float:
        return float(self.cell_volumes.max() ** (1.0 / self.dim))


def _interval_mesh(spec: MeshSpec) -> Mesh:
    x0, x1 = spec.extent[0], spec.extent[1]
    vertices = np.linspace(x0, x1, spec.n + 1).reshape(-1, 1)
    cells = np.column_stack([np.arange(spec.n), np.arange(1, spec.n + 1)])
    facets = np.array([[0], [spec.n]])
    return Mesh(1, vertices, cells, facets, ("left", "right"))


def _rectangle_mesh(spec: MeshSpec) -> Mesh:
    """Union-jack triangulation: the diagonal alternates between neighbouring squares"""
    x0, x1, y0, y1 = spec.extent[:4]
    nx, ny = spec.nx, spec.ny
    xs, ys = np.meshgrid(np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1))
    vertices = np.column_stack([xs.ravel(), ys.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    cells = []
    for j in range(ny):
        for i in range(nx):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            if (i + j) % 2 == 0:
                cells.extend([(v00, v10, v11), (v00, v11, v01)])
            else:
                cells.extend([(v00, v10, v01), (v10, v11, v01)])

    facets, markers = [], []
    for i in range(nx):
        facets.append((vid(i, 0), vid(i + 1, 0)))
        markers.append("bottom")
    for j in range(ny):
        facets.append((vid(nx, j), vid(nx, j + 1)))
        markers.append("right")
    for i in range(nx):
        facets.append((vid(i + 1, ny), vid(i, ny)))
        markers.append("top")
    for j in range(ny):
        facets.append((vid(0, j + 1), vid(0, j)))
        markers.append("left")

    return Mesh(2, vertices, np.array(cells, dtype=int), np.array(facets, dtype=int), tuple(markers))


def generate_mesh(spec: MeshSpec) -> Mesh:
    """Uniform interval mesh or union-jack rectangle mesh with side markers"""
    if spec.kind == INTERVAL:
        return _interval_mesh(spec)
    return _rectangle_mesh(spec)


def write_mesh(mesh: Mesh, partition: BoundaryPartition, path: Union[str, Path]) -> None:
    tags = partition.tags(mesh)
    lines = [f"{mesh.dim} {mesh.n_vertices} {mesh.n_cells} {mesh.boundary_facets.shape[0]}"]
    lines += [" ".join(f"{c:.17g}" for c in vertex) for vertex in mesh.vertices]
    lines += [" ".join(str(v) for v in cell) for cell in mesh.cells]
    lines += [" ".join(str(v) for v in facet) + f" {tag}" for facet, tag in zip(mesh.boundary_facets, tags)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path: Union[str, Path]) -> Mesh:
    """Read the plain-text format; facets come back marked 'D' or 'N'"""
    rows = [line.split() for line in Path(path).read_text().splitlines() if line.strip()]
    try:
        dim, nv, nc, nbf = (int(v) for v in rows[0])
        body = rows[1:]
        if len(body) != nv + nc + nbf:
            raise MeshError(f"{path}: expected {nv + nc + nbf} body lines, found {len(body)}")
        vertices = np.array([[float(v) for v in row] for row in body[:nv]])
        cells = np.array([[int(v) for v in row] for row in body[nv:nv + nc]], dtype=int)
        facet_rows = body[nv + nc:]
        facets = np.array([[int(v) for v in row[:-1]] for row in facet_rows], dtype=int).reshape(nbf, dim)
        tags = tuple(row[-1] for row in facet_rows)
    except (ValueError, IndexError) as exc:
        raise MeshError(f"{path}: malformed mesh file ({exc})") from exc

    if any(tag not in ("D", "N") for tag in tags):
        raise MeshError(f"{path}: facet tags must be D or N")
    return Mesh(dim, vertices.reshape(nv, dim), cells, facets, tags)
