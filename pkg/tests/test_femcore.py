import numpy as np
import pytest

from src.femcore import (
    BoundaryPartition,
    FeSpace,
    Field,
    MeshSpec,
    SpaceKind,
    assemble,
    coercivity_constant,
    divergence_per_cell,
    dual_norm_vprime,
    generate_mesh,
    positivity_probe,
    read_mesh,
    require_same_mesh,
    solve_spd,
    write_mesh,
)
from src.utils.errors import MeshError, SpaceMismatchError


def _space(mesh, kind, *dirichlet):
    return FeSpace(mesh, kind, BoundaryPartition(frozenset(dirichlet)))


class TestMesh:
    def test_rectangle_counts(self, square_mesh):
        assert square_mesh.dim == 2
        assert square_mesh.n_vertices == 25
        assert square_mesh.n_cells == 32
        assert square_mesh.total_volume == pytest.approx(1.0)
        assert square_mesh.markers == frozenset({"left", "right", "bottom", "top"})

    def test_interval(self):
        mesh = generate_mesh(MeshSpec("interval", n=5, extent=(0.0, 2.0)))
        assert mesh.n_cells == 5
        assert mesh.total_volume == pytest.approx(2.0)
        assert mesh.markers == frozenset({"left", "right"})

    def test_positive_cell_volumes(self):
        mesh = generate_mesh(MeshSpec("rectangle", nx=3, ny=5, extent=(0.0, 3.0, -1.0, 1.0)))
        assert np.all(mesh.cell_volumes > 0)
        assert mesh.total_volume == pytest.approx(6.0)

    def test_boundary_vertices(self, square_mesh):
        left = square_mesh.boundary_vertices(["left"])
        assert left.size == 5
        np.testing.assert_allclose(square_mesh.vertices[left, 0], 0.0)
        assert square_mesh.boundary_vertices([]).size == 0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "sphere"},
            {"kind": "rectangle", "nx": 0, "ny": 2},
            {"kind": "interval", "n": 2.5},
            {"kind": "rectangle", "nx": 2, "ny": 2, "extent": (0.0, 1.0, 1.0, 1.0)},
        ],
    )
    def test_invalid_spec(self, kwargs):
        with pytest.raises(MeshError):
            MeshSpec(**kwargs)

    def test_dirichlet_measure(self, square_mesh):
        partition = BoundaryPartition(frozenset({"left", "top"}))
        assert partition.dirichlet_measure(square_mesh) == pytest.approx(2.0)

    def test_file_roundtrip(self, square_mesh, tmp_path):
        path = tmp_path / "square.mesh"
        write_mesh(square_mesh, BoundaryPartition(frozenset({"left"})), path)
        loaded = read_mesh(path)
        np.testing.assert_array_equal(loaded.vertices, square_mesh.vertices)
        np.testing.assert_array_equal(loaded.cells, square_mesh.cells)
        assert loaded.boundary_vertices(["D"]).tolist() == square_mesh.boundary_vertices(["left"]).tolist()

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "broken.mesh"
        path.write_text("2 3 1 0\n0 0\n1 0\n")
        with pytest.raises(MeshError):
            read_mesh(path)


class TestSpaces:
    def test_dof_counts(self, square_mesh):
        assert _space(square_mesh, SpaceKind.SCALAR_H1).n_dofs == 25
        assert _space(square_mesh, SpaceKind.VECTOR_DIRICHLET0, "bottom").n_dofs == 50
        assert _space(square_mesh, SpaceKind.CELLWISE).n_dofs == 32

    def test_constrained_dofs(self, square_mesh):
        vector = _space(square_mesh, SpaceKind.VECTOR_DIRICHLET0, "bottom")
        assert vector.constrained_dofs.size == 10
        assert vector.n_free == 40
        # H1 without boundary condition never constrains
        assert _space(square_mesh, SpaceKind.SCALAR_H1, "bottom").constrained_dofs.size == 0

    def test_expand_keeps_lifting(self, square_mesh):
        space = _space(square_mesh, SpaceKind.SCALAR_DIRICHLET0, "left")
        lifting = np.full(space.n_dofs, 3.0)
        full = space.expand(np.zeros(space.n_free), lifting)
        np.testing.assert_allclose(full[space.constrained_dofs], 3.0)
        np.testing.assert_allclose(full[space.free_dofs], 0.0)

    def test_field_length_checked(self, square_mesh):
        with pytest.raises(SpaceMismatchError):
            Field(_space(square_mesh, SpaceKind.SCALAR_H1), np.zeros(3))

    def test_different_meshes(self, square_mesh):
        other = generate_mesh(MeshSpec("rectangle", nx=4, ny=4))
        with pytest.raises(SpaceMismatchError):
            require_same_mesh(_space(square_mesh, SpaceKind.SCALAR_H1), _space(other, SpaceKind.SCALAR_H1))


class TestAssembly:
    def test_mass_integrates_constants(self, square_mesh):
        space = _space(square_mesh, SpaceKind.SCALAR_H1)
        ones = np.ones(space.n_dofs)
        assert ones @ assemble("mass", space).apply(ones) == pytest.approx(1.0)
        assert assemble("lumped_mass", space).matrix.diagonal().sum() == pytest.approx(1.0)

    def test_stiffness_on_linear_functions(self, square_mesh):
        space = _space(square_mesh, SpaceKind.SCALAR_H1)
        stiffness = assemble("stiffness", space)
        x, y = square_mesh.vertices.T
        np.testing.assert_allclose(stiffness.apply(np.ones(space.n_dofs)), 0.0, atol=1e-13)
        assert x @ stiffness.apply(x) == pytest.approx(1.0)
        assert (x + 2 * y) @ stiffness.apply(x + 2 * y) == pytest.approx(5.0)
        stiffness.assert_symmetric()

    def test_weighted_stiffness_records_quadrature(self, square_mesh):
        space = _space(square_mesh, SpaceKind.SCALAR_H1)
        op = assemble("stiffness", space, coeff=np.full(square_mesh.n_cells, 2.0))
        assert op.quadrature == "barycentre"
        x = square_mesh.vertices[:, 0]
        assert x @ op.apply(x) == pytest.approx(2.0)

    def test_elasticity_kernel_and_symmetry(self, square_mesh):
        space = _space(square_mesh, SpaceKind.VECTOR_DIRICHLET0, "bottom")
        op = assemble("elasticity", space, mu=1.0, lam=2.0)
        op.assert_symmetric()
        translation = space.from_components(np.tile([1.0, -0.5], (square_mesh.n_vertices, 1)))
        np.testing.assert_allclose(op.apply(translation), 0.0, atol=1e-12)

    def test_elasticity_energy_of_uniform_expansion(self, square_mesh):
        # u = (x, y): ε(u) = I, so 2μ|ε|² + λ(div u)² = 2μ·2 + λ·4
        space = _space(square_mesh, SpaceKind.VECTOR_DIRICHLET0, "bottom")
        op = assemble("elasticity", space, mu=1.0, lam=2.0)
        u = space.from_components(square_mesh.vertices)
        assert u @ op.apply(u) == pytest.approx(12.0)

    def test_divergence_per_cell(self, square_mesh):
        space = _space(square_mesh, SpaceKind.VECTOR_DIRICHLET0, "bottom")
        x, y = square_mesh.vertices.T
        u = space.from_components(np.column_stack([x + 3 * y, -2 * y]))
        np.testing.assert_allclose(divergence_per_cell(space) @ u, -1.0)

    def test_div_coupling_shape(self, square_mesh):
        vector = _space(square_mesh, SpaceKind.VECTOR_DIRICHLET0, "bottom")
        cells = _space(square_mesh, SpaceKind.CELLWISE)
        op = assemble("div_coupling", cells, vector, b=0.5)
        assert op.shape == (vector.n_dofs, cells.n_dofs)
        u = vector.from_components(square_mesh.vertices)
        # ∫ b·1·div u = 0.5·2·|Ω|
        assert u @ op.apply(np.ones(cells.n_dofs)) == pytest.approx(1.0)

    def test_div_coupling_needs_vector_test(self, square_mesh):
        scalar = _space(square_mesh, SpaceKind.SCALAR_H1)
        with pytest.raises(SpaceMismatchError):
            assemble("div_coupling", scalar, scalar)

    def test_load_vector(self, square_mesh):
        space = _space(square_mesh, SpaceKind.VECTOR_DIRICHLET0, "bottom")
        load = assemble("load", space, density=np.array([0.0, -2.0]))
        components = space.components_of(load.values)
        assert components[:, 0].sum() == pytest.approx(0.0)
        assert components[:, 1].sum() == pytest.approx(-2.0)

    def test_unknown_kind(self, square_mesh):
        with pytest.raises(ValueError):
            assemble("curl", _space(square_mesh, SpaceKind.SCALAR_H1))


class TestSolvers:
    def test_linear_solution_reproduced(self, square_mesh):
        space = _space(square_mesh, SpaceKind.SCALAR_DIRICHLET0, "left", "right")
        x = square_mesh.vertices[:, 0]
        lifting = np.zeros(space.n_dofs)
        lifting[space.constrained_dofs] = x[space.constrained_dofs]
        solution = solve_spd(assemble("stiffness", space), np.zeros(space.n_dofs), lifting)
        np.testing.assert_allclose(solution.values, x, atol=1e-12)

    def test_rhs_length_checked(self, square_mesh):
        space = _space(square_mesh, SpaceKind.SCALAR_DIRICHLET0, "left")
        with pytest.raises(SpaceMismatchError):
            solve_spd(assemble("stiffness", space), np.zeros(3))

    def test_dual_norm_of_stiffness_image(self, square_mesh):
        space = _space(square_mesh, SpaceKind.SCALAR_DIRICHLET0, "left")
        stiffness = assemble("stiffness", space)
        x = square_mesh.vertices[:, 0]
        assert dual_norm_vprime(stiffness.apply(x), space, stiffness) == pytest.approx(1.0)
        assert dual_norm_vprime(np.zeros(space.n_dofs), space) == 0.0

    def test_dual_norm_ignores_constants_without_dirichlet(self, square_mesh):
        space = _space(square_mesh, SpaceKind.SCALAR_H1)
        constant = assemble("lumped_mass", space).matrix.diagonal()
        assert dual_norm_vprime(constant, space) == pytest.approx(0.0, abs=1e-12)

    def test_coercivity_and_positivity(self, square_mesh):
        space = _space(square_mesh, SpaceKind.SCALAR_DIRICHLET0, "left")
        stiffness = assemble("stiffness", space)
        mass = assemble("mass", space)
        assert coercivity_constant(stiffness, mass) > 0.0
        assert positivity_probe(stiffness, samples=20, seed=1) > 0.0
