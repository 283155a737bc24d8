# src/scenario_io/scenario.py
from dataclasses import dataclass, replace
from typing import List

import numpy as np

from src.constitutive import CapillaryModel, RegularizedFamily, RegularizedModel, saturation_from_capillary
from src.coupled import MaterialParams, MechanicsSystem, ProblemSpaces, State, init_state
from src.femcore import Mesh
from src.stepper import StepControls
from src.utils.logging_config import get_logger
from .config_loader import Config

logger = get_logger(__name__)


@dataclass
class Scenario:
    """Everything a run needs, built once from a validated Config"""

    config: Config
    mesh: Mesh
    spaces: ProblemSpaces
    params: MaterialParams
    base: CapillaryModel
    family: RegularizedFamily
    controls: StepControls
    mechanics: MechanicsSystem
    initial: State

    @property
    def final_eps(self) -> float:
        return self.controls.eps_schedule[-1]

    @property
    def regmodel(self) -> RegularizedModel:
        return self.family.at(self.final_eps)

    def boundary_saturation(self) -> List[float]:
        """s_n^D = S(p_n^D - p_w^D) at the flow-Dirichlet vertices"""
        dofs = self.spaces.pressure.constrained_dofs
        if dofs.size == 0:
            return []
        p_n = self.params.nodal(self.params.p_dirichlet_n, self.mesh)[dofs]
        p_w = self.params.nodal(self.params.p_dirichlet_w, self.mesh)[dofs]
        return [float(s) for s in saturation_from_capillary(self.base, p_n - p_w)]


def prepare_scenario(config: Config) -> Scenario:
    """Build spaces, material and the equilibrium initial state at the final ε.

    Dirichlet pressures given as `initial` take the equilibrium pressures of
    the initial state, so an undisturbed scenario stays at rest.
    """
    mesh = config.build_mesh()
    spaces = config.build_spaces(mesh)
    params = config.material(mesh)
    base = config.capillary()
    family = RegularizedFamily(base)
    controls = config.controls()
    mechanics = MechanicsSystem(spaces, params)
    final_eps = controls.eps_schedule[-1]
    contents = config.initial_contents(spaces)

    from_initial = config.dirichlet_from_initial()
    initial = init_state(contents, params, spaces, family.at(final_eps), final_eps, mechanics,
                         equilibrium_dirichlet=from_initial)
    if any(from_initial):
        changes = {}
        if from_initial[0]:
            changes["p_dirichlet_n"] = np.array(initial.p_n, copy=True)
        if from_initial[1]:
            changes["p_dirichlet_w"] = np.array(initial.p_w, copy=True)
        params = replace(params, **changes)
        mechanics = MechanicsSystem(spaces, params)

    logger.info("Scenario prepared", vertices=mesh.n_vertices, cells=mesh.n_cells, final_eps=final_eps,
                pure_neumann_flow=spaces.pure_neumann_flow)
    return Scenario(config, mesh, spaces, params, base, family, controls, mechanics, initial)
