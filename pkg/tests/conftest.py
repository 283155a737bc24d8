# tests/conftest.py
import numpy as np
import pytest

from src.constitutive import BrooksCoreyModel, PorosityBounds, RegularizedFamily
from src.coupled import MaterialParams, MechanicsSystem, build_problem_spaces, init_state
from src.constitutive import PhaseContentPair
from src.femcore import MeshSpec, generate_mesh
from src.stepper import StepControls


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-size tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def bc_model() -> BrooksCoreyModel:
    return BrooksCoreyModel(entry_pressure=1.0, exponent=3.0)


@pytest.fixture
def bounds() -> PorosityBounds:
    return PorosityBounds(0.1, 0.4)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def square_mesh():
    return generate_mesh(MeshSpec("rectangle", nx=4, ny=4))


@pytest.fixture
def small_problem(bc_model):
    """4x4 square, clamped bottom, pure-Neumann flow, gravity-free rest state"""
    mesh = generate_mesh(MeshSpec("rectangle", nx=4, ny=4))
    spaces = build_problem_spaces(mesh, (), ("bottom",))
    params = MaterialParams(bounds=PorosityBounds(0.1, 0.5), gravity=(0.0, 0.0), phi_r=0.3)
    family = RegularizedFamily(bc_model)
    controls = StepControls(h=1e-2, eps_schedule=(1e-1, 1e-2))
    mechanics = MechanicsSystem(spaces, params)
    contents = PhaseContentPair(np.full(mesh.n_cells, 0.1), np.full(mesh.n_cells, 0.2))
    eps = controls.eps_schedule[-1]
    state = init_state(contents, params, spaces, family.at(eps), eps, mechanics)
    return {
        "mesh": mesh, "spaces": spaces, "params": params, "family": family, "controls": controls,
        "mechanics": mechanics, "state": state, "base": bc_model,
    }


@pytest.fixture
def graded_state(small_problem):
    """Nonuniform contents: wetting fluid heavier towards x = 1"""
    mesh = small_problem["mesh"]
    x = mesh.barycenters[:, 0]
    contents = PhaseContentPair(0.15 - 0.05 * x, 0.12 + 0.08 * x)
    eps = small_problem["controls"].eps_schedule[-1]
    return init_state(contents, small_problem["params"], small_problem["spaces"],
                      small_problem["family"].at(eps), eps, small_problem["mechanics"])
