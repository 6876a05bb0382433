"""Single-material optimization: steepest-descent pseudo-time stepping of the
density field with a scalar multiplier enforcing the volume constraint.

Each iteration solves the elastic state on the current density, then one
linear saddle step of the semi-implicit flow

    [M/tau + K, a; a^T, 0] (phi*, lam) = (M phi_n / tau + q_s + q_psi, m|O|)

where M and K carry the gamma_phi and kappa_phi*gamma_phi scalings, the
energy and double-well forcings are evaluated at the previous iterate, and
phi* is clamped to [0, 1] afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse

from .elasticity import BoundaryConditions, StateSolver
from .linalg import SolverFailure, SparseSymmetricSystem, solve_saddle_scalar, solve_spd
from .material import (
    InterpolationSpec,
    IsotropicElasticity,
    double_well,
    stiffness_scale_single_dphi,
)
from .mesh import (
    ScalarKernel,
    StructuredQuadMesh,
    node_areas,
    scalar_mass_matrix,
    scalar_stiffness_matrix,
)


@dataclass(frozen=True)
class OptConfig:
    """Optimization constants shared by both flow variants.

    ``m`` is the target volume fraction, ``kappa_phi`` the interface energy
    weight, ``gamma_phi`` the interface thickness (kept equal to the
    material residual scale), ``tau`` the pseudo-time step.
    """

    m: float
    kappa_phi: float
    gamma_phi: float
    tau: float
    tol: float = 0.01
    max_iter: int = 1000
    phi0: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.m <= 1.0:
            raise ValueError(f"volume fraction must lie in (0, 1], got {self.m}")
        for name in ("kappa_phi", "gamma_phi", "tau", "tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 <= self.phi0 <= 1.0:
            raise ValueError(f"phi0 must lie in [0, 1], got {self.phi0}")


@dataclass
class IterationRow:
    """Per-iteration scalars; compliance and objective belong to the fields
    entering the iteration, volume and the increments to its result."""

    iteration: int
    compliance: float
    volume: float
    m_chi: float
    delta_phi: float
    delta_chi: float
    objective: float
    volume_residual_pre: float
    bound_violation: float
    qt_max: float


@dataclass
class RunRecord:
    """History of one optimization run."""

    mode: str
    rows: list[IterationRow] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    final_compliance: float = math.nan
    final_volume: float = math.nan
    final_material_fraction: float = math.nan
    error: str | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows])


@dataclass
class SingleOptState:
    """Final density field, multiplier and displacement of a run."""

    phi: np.ndarray
    multiplier: float
    iteration: int
    u: np.ndarray | None = None


def assemble_phase_matrices(mesh: StructuredQuadMesh, cfg: OptConfig):
    """Scaled mass and interface matrices plus the volume-coupling column.

    Returns (gamma*M, kappa*gamma*K, tau*a) where M and K are the consistent
    mass and Laplacian matrices and a holds the node areas.
    """
    m_hat = scalar_mass_matrix(mesh)
    k_hat = scalar_stiffness_matrix(mesh)
    a = node_areas(mesh)
    return (cfg.gamma_phi * m_hat,
            cfg.kappa_phi * cfg.gamma_phi * k_hat,
            cfg.tau * a)


def project_unit_interval(phi: np.ndarray) -> np.ndarray:
    """Nodewise clamp onto [0, 1]."""
    return np.clip(phi, 0.0, 1.0)


def relative_increment(new: np.ndarray, old: np.ndarray) -> float:
    """Nodal 2-norm of the increment relative to the previous iterate.

    A zero previous iterate returns +inf, forcing another iteration.
    """
    denom = float(np.linalg.norm(old))
    if denom == 0.0:
        return math.inf
    return float(np.linalg.norm(new - old)) / denom


class PhaseFlow:
    """Cached operators for the density saddle step on a fixed mesh/config."""

    def __init__(self, mesh: StructuredQuadMesh, cfg: OptConfig):
        self.mesh = mesh
        self.cfg = cfg
        self.kernel = ScalarKernel(mesh)
        m_phi, k_phi, col = assemble_phase_matrices(mesh, cfg)
        self.mass_scaled = m_phi
        self.stiff_scaled = k_phi
        self.volume_column = col
        self.system = SparseSymmetricSystem(
            (m_phi / cfg.tau + k_phi).tocsr())
        self.areas = col / cfg.tau
        self.area_total = float(self.areas.sum())
        self.target = cfg.m * self.area_total
        # The system matrix never changes, so the lifted constraint column
        # is solved for once.
        self._y2 = solve_spd(self.system, self.areas)
        self._warm = None

    def assemble_rhs(self, phi_n: np.ndarray,
                     denergy_gauss: np.ndarray) -> np.ndarray:
        """Right-hand side of the saddle step for lagged forcing terms."""
        phi_gauss = self.kernel.gauss_values(phi_n)
        _, dwell = double_well(phi_gauss)
        q_mass = (self.mass_scaled @ phi_n) / self.cfg.tau
        q_energy = self.kernel.scatter(denergy_gauss)
        q_well = -(self.cfg.kappa_phi / self.cfg.gamma_phi) * self.kernel.scatter(dwell)
        return q_mass + q_energy + q_well

    def step(self, phi_n: np.ndarray,
             denergy_gauss: np.ndarray) -> tuple[np.ndarray, float]:
        """One saddle solve; returns the unclamped density and multiplier."""
        rhs = self.assemble_rhs(phi_n, denergy_gauss)
        phi_star, lam = solve_saddle_scalar(
            self.system, self.areas, rhs, self.target,
            y2=self._y2, x0=self._warm)
        self._warm = phi_star
        return phi_star, lam

    def volume_residual(self, phi_star: np.ndarray) -> float:
        """Relative violation of the volume constraint before clamping."""
        return abs(float(self.areas @ phi_star) - self.target) / abs(self.target)

    def interface_energy(self, phi: np.ndarray) -> float:
        """kappa * (gamma/2 |grad phi|^2 + psi0(phi)/gamma) integrated."""
        cfg = self.cfg
        grad_term = 0.5 * float(phi @ (self.stiff_scaled @ phi))
        well, _ = double_well(self.kernel.gauss_values(phi))
        well_term = (cfg.kappa_phi / cfg.gamma_phi) * self.kernel.integrate(well)
        return grad_term + well_term


def step_single(mesh: StructuredQuadMesh, cfg: OptConfig, phi_n: np.ndarray,
                denergy_gauss: np.ndarray) -> tuple[np.ndarray, float]:
    """Convenience wrapper building a one-off PhaseFlow and stepping once."""
    return PhaseFlow(mesh, cfg).step(phi_n, denergy_gauss)


def run_single(mesh: StructuredQuadMesh, mat: IsotropicElasticity,
               spec: InterpolationSpec, bc: BoundaryConditions,
               cfg: OptConfig, on_iteration=None) -> tuple[SingleOptState, RunRecord]:
    """Run the single-material optimization loop until the density increment
    falls below tolerance or the iteration cap is reached."""
    record = RunRecord(mode="single")
    solver = StateSolver(mesh, mat, spec, bc)
    flow = PhaseFlow(mesh, cfg)

    phi = np.full(mesh.n_nodes, cfg.phi0)
    lam = 0.0
    u_flat = np.zeros(2 * mesh.n_nodes)
    delta = math.inf
    n = 0

    try:
        while delta >= cfg.tol and n < cfg.max_iter:
            n += 1
            state = solver.solve(phi, x0=u_flat)
            u_flat = state.u_flat
            objective = state.compliance + flow.interface_energy(phi)

            strains = solver.kernel.strains(u_flat)
            quad = solver.kernel.bulk_energy_density(strains)
            denergy = stiffness_scale_single_dphi(
                flow.kernel.gauss_values(phi), spec) * quad

            phi_star, lam = flow.step(phi, denergy)
            pre_residual = flow.volume_residual(phi_star)
            new_phi = project_unit_interval(phi_star)
            delta = relative_increment(new_phi, phi)
            phi = new_phi

            violation = max(float((-phi).max(initial=0.0)),
                            float((phi - 1.0).max(initial=0.0)))
            volume = float(flow.areas @ phi) / flow.area_total
            record.rows.append(IterationRow(
                iteration=n, compliance=state.compliance, volume=volume,
                m_chi=math.nan, delta_phi=delta, delta_chi=math.nan,
                objective=objective, volume_residual_pre=pre_residual,
                bound_violation=violation, qt_max=math.nan))
            if on_iteration is not None:
                on_iteration(n, phi, None)

        record.converged = delta < cfg.tol
        record.iterations = n
        final = solver.solve(phi, x0=u_flat)
        record.final_compliance = final.compliance
        record.final_volume = float(flow.areas @ phi) / flow.area_total
        record.final_material_fraction = record.final_volume
        return SingleOptState(phi=phi, multiplier=lam, iteration=n, u=final.u), record
    except SolverFailure as err:
        record.error = str(err)
        record.converged = False
        record.iterations = n
        record.final_volume = float(flow.areas @ phi) / flow.area_total
        return SingleOptState(phi=phi, multiplier=lam, iteration=n), record
