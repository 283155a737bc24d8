# src/diagnostics/conservation.py
"""
Trajectory-level bookkeeping: content balance, dual-norm increments and the
discrete Gronwall bound on the regularized energy.
"""
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.constitutive import CapillaryModel, kirchhoff_eval
from src.coupled import MaterialParams, State
from src.femcore import dual_norm_vprime
from .energies import gradient_seminorm_sq

PHASES = ("n", "w")


@dataclass
class MassBalance:
    """Per-phase ∫φ_α^j - ∫φ_α⁰ next to the accumulated Dirichlet reactions"""

    drift_n: List[float] = field(default_factory=list)
    drift_w: List[float] = field(default_factory=list)
    flux_n: List[float] = field(default_factory=list)
    flux_w: List[float] = field(default_factory=list)
    initial_n: float = 0.0
    initial_w: float = 0.0

    @property
    def max_relative_drift(self) -> Tuple[float, float]:
        def rel(drift, base):
            return max((abs(d) for d in drift), default=0.0) / max(abs(base), np.finfo(float).tiny)
        return rel(self.drift_n, self.initial_n), rel(self.drift_w, self.initial_w)

    @property
    def flux_mismatch(self) -> float:
        """max_j |drift - accumulated boundary flux|; zero up to solver tolerance"""
        gaps = [abs(d - f) for d, f in zip(self.drift_n, self.flux_n)]
        gaps += [abs(d - f) for d, f in zip(self.drift_w, self.flux_w)]
        return max(gaps, default=0.0)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(max_relative_drift=list(self.max_relative_drift), flux_mismatch=self.flux_mismatch)
        return out


def mass_balance(states: Sequence[State], boundary_fluxes: Optional[Sequence[Tuple[float, float]]] = None
                 ) -> MassBalance:
    """Content drift per step.

    boundary_fluxes holds the per-step (n, w) sums of the flow residual over
    Dirichlet rows. Testing the flow equation with v = 1 shows the content
    change of a step equals that sum, so the drift matches the accumulated
    flux, and both vanish for pure-Neumann flow.
    """
    if not states:
        return MassBalance()
    m0_n, m0_w = states[0].total_contents()
    balance = MassBalance(initial_n=m0_n, initial_w=m0_w)
    fluxes = list(boundary_fluxes) if boundary_fluxes is not None else [(0.0, 0.0)] * (len(states) - 1)
    acc_n = acc_w = 0.0
    for state, (flux_n, flux_w) in zip(states[1:], fluxes):
        m_n, m_w = state.total_contents()
        acc_n += flux_n
        acc_w += flux_w
        balance.drift_n.append(m_n - m0_n)
        balance.drift_w.append(m_w - m0_w)
        balance.flux_n.append(acc_n)
        balance.flux_w.append(acc_w)
    return balance


def content_increment_norms(prev: State, current: State) -> Tuple[float, float]:
    """(‖φ_n - φ_n^prev‖_V', ‖φ_w - φ_w^prev‖_V')"""
    spaces = current.spaces
    out = []
    for a in PHASES:
        change = getattr(current, f"phi_{a}") - getattr(prev, f"phi_{a}")
        functional = spaces.cell_average.T @ (spaces.volumes * change)
        out.append(dual_norm_vprime(functional, spaces.pressure, spaces.unit_stiffness))
    return out[0], out[1]


def dual_norm_increments(states: Sequence[State], h: float) -> List[Tuple[float, float]]:
    """‖φ_α^j - φ_α^{j-1}‖_V' / h for every step of a trajectory"""
    return [tuple(v / h for v in content_increment_norms(prev, cur)) for prev, cur in zip(states, states[1:])]


@dataclass
class GronwallReport:
    times: List[float]
    f_eps: List[float]
    gravity_work: List[float]
    dirichlet_work: List[float]
    seminorm_integral: float
    c_prime: float
    c: float

    @property
    def bound_holds(self) -> bool:
        if not self.f_eps:
            return True
        horizon = self.times[-1] - self.times[0]
        bound = np.exp(self.c * horizon) * (self.f_eps[0] + self.c_prime)
        return max(self.f_eps) <= bound * (1.0 + 1e-12) + 1e-300

    def to_dict(self) -> dict:
        out = asdict(self)
        out["bound_holds"] = self.bound_holds
        return out


def gronwall_bookkeeping(states: Sequence[State], f_eps: Sequence[float], gravity_work: Sequence[float],
                         params: MaterialParams, base: CapillaryModel) -> GronwallReport:
    """Measured constants of max_j F_ε(X^j) ≤ e^{CT}(F_ε(X⁰) + C').

    C' is the largest accumulated gravity plus Dirichlet work magnitude, raised
    when needed so that every F_ε + C' is positive; C is the smallest rate
    with (F_j + C') ≤ e^{C t_j}(F_0 + C') for all j. The time integral of
    ‖∇ξ(s_n)‖² + ‖∇π‖² + ‖∇χ‖² is reported next to them.
    """
    if not states:
        return GronwallReport([], [], [], [], 0.0, 0.0, 0.0)
    spaces = states[0].spaces
    mesh = spaces.mesh
    p_dirichlet = {
        "n": spaces.cell_average @ params.nodal(params.p_dirichlet_n, mesh),
        "w": spaces.cell_average @ params.nodal(params.p_dirichlet_w, mesh),
    }
    vols = spaces.volumes
    t0 = states[0].time

    cumulative_gravity = np.concatenate([[0.0], np.cumsum(np.asarray(gravity_work, dtype=float))])
    dirichlet = []
    seminorms = 0.0
    for j, state in enumerate(states):
        dirichlet.append(sum(float(vols @ ((getattr(state, f"phi_{a}") - getattr(states[0], f"phi_{a}"))
                                           * p_dirichlet[a])) for a in PHASES))
        if j > 0:
            s_nodal = np.clip(spaces.lift_to_nodes(np.clip(state.s_n, 0.0, 1.0)), 0.0, 1.0)
            xi, _ = kirchhoff_eval(base, s_nodal)
            step = state.time - states[j - 1].time
            seminorms += step * (gradient_seminorm_sq(state, xi) + gradient_seminorm_sq(state, state.pi_nodal())
                                 + gradient_seminorm_sq(state, state.chi_nodal()))

    energies = np.asarray(f_eps, dtype=float)
    work = np.abs(cumulative_gravity[:len(energies)]) + np.abs(np.asarray(dirichlet[:len(energies)]))
    c_prime = float(work.max()) if work.size else 0.0
    floor = float(-energies.min()) if energies.size else 0.0
    if energies.size and energies.min() + c_prime <= 0.0:
        c_prime = floor + max(abs(floor), 1.0) * 1e-6

    times = [s.time for s in states]
    rates = [np.log((fj + c_prime) / (energies[0] + c_prime)) / (t - t0)
             for fj, t in zip(energies[1:], times[1:]) if t > t0]
    c = max([0.0] + [float(r) for r in rates])
    return GronwallReport(times, energies.tolist(), cumulative_gravity.tolist(), dirichlet,
                          float(seminorms), c_prime, c)
