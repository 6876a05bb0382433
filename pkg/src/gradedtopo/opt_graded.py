"""Graded-material optimization: the density flow of the single-material
variant plus an independent gradient flow for the grading field chi under the
box constraint 0 <= chi <= phi.

The per-iteration linear system is block-diagonal between (phi, lambda) and
chi, so one iteration is the density saddle step followed by a plain SPD
solve

    (M_chi/tau + K_chi) chi* = M_chi chi_n / tau + q_t

with q_t the grading-energy forcing; both fields are clamped afterwards,
phi first and chi against the clamped phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elasticity import BoundaryConditions, StateSolver
from .linalg import SolverFailure, SparseSymmetricSystem, solve_spd
from .material import (
    InterpolationSpec,
    IsotropicElasticity,
    grading_factor,
    stiffness_scale_single,
    stiffness_scale_single_dphi,
)
from .mesh import (
    StructuredQuadMesh,
    field_mean,
    node_areas,
    scalar_mass_matrix,
    scalar_stiffness_matrix,
)
from .opt_single import (
    IterationRow,
    OptConfig,
    PhaseFlow,
    RunRecord,
    project_unit_interval,
    relative_increment,
)


@dataclass(frozen=True)
class GradedConfig(OptConfig):
    """OptConfig extended with the grading-flow constants.

    ``chi0`` of None starts the grading field at phi0, i.e. at the upper
    bound of its admissible band.
    """

    kappa_chi: float = 1.0
    gamma_chi: float = 0.01
    chi0: float | None = None

    def __post_init__(self):
        super().__post_init__()
        if self.kappa_chi <= 0.0 or self.gamma_chi <= 0.0:
            raise ValueError("kappa_chi and gamma_chi must be positive")
        if self.chi0 is not None and not 0.0 <= self.chi0 <= 1.0:
            raise ValueError(f"chi0 must lie in [0, 1], got {self.chi0}")

    @property
    def chi_start(self) -> float:
        return self.phi0 if self.chi0 is None else self.chi0


@dataclass
class GradedOptState:
    """Final fields of a graded run."""

    phi: np.ndarray
    chi: np.ndarray
    multiplier: float
    iteration: int
    u: np.ndarray | None = None


def assemble_chi_matrices(mesh: StructuredQuadMesh, cfg: GradedConfig):
    """Scaled mass and interface matrices of the grading flow.

    Same sparsity as the density pair on the shared mesh; returns
    (gamma_chi*M, kappa_chi*gamma_chi*K).
    """
    m_hat = scalar_mass_matrix(mesh)
    k_hat = scalar_stiffness_matrix(mesh)
    return (cfg.gamma_chi * m_hat,
            cfg.kappa_chi * cfg.gamma_chi * k_hat)


def project_chi(chi: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Nodewise clamp of the grading field onto [0, phi]."""
    return np.minimum(np.maximum(chi, 0.0), phi)


def material_fraction(chi: np.ndarray, mesh: StructuredQuadMesh) -> float:
    """Domain mean of the grading field (consistent-mass weighting)."""
    return field_mean(mesh, chi)


class ChiFlow:
    """Cached operators for the grading-field update."""

    def __init__(self, mesh: StructuredQuadMesh, cfg: GradedConfig,
                 phase: PhaseFlow):
        self.cfg = cfg
        self.kernel = phase.kernel
        m_chi, k_chi = assemble_chi_matrices(mesh, cfg)
        self.mass_scaled = m_chi
        self.system = SparseSymmetricSystem((m_chi / cfg.tau + k_chi).tocsr())
        self.stiff_scaled = k_chi
        self._warm = None

    def step(self, chi_n: np.ndarray,
             denergy_gauss: np.ndarray) -> tuple[np.ndarray, float]:
        """One SPD solve of the grading flow; returns (chi*, max |q_t|)."""
        q_t = self.kernel.scatter(denergy_gauss)
        rhs = (self.mass_scaled @ chi_n) / self.cfg.tau + q_t
        chi_star = solve_spd(self.system, rhs, x0=self._warm)
        self._warm = chi_star
        return chi_star, float(np.abs(q_t).max())

    def interface_energy(self, chi: np.ndarray) -> float:
        """kappa_chi * gamma_chi / 2 * |grad chi|^2 integrated."""
        return 0.5 * float(chi @ (self.stiff_scaled @ chi))


def step_graded(mesh: StructuredQuadMesh, cfg: GradedConfig,
                phi_n: np.ndarray, chi_n: np.ndarray,
                denergy_dphi_gauss: np.ndarray,
                denergy_dchi_gauss: np.ndarray):
    """One staggered design update; returns (phi*, chi*, lambda).

    The two subsystems are independent given the previous fields and state,
    so they are solved back to back without coupling iterations.
    """
    phase = PhaseFlow(mesh, cfg)
    chi_flow = ChiFlow(mesh, cfg, phase)
    phi_star, lam = phase.step(phi_n, denergy_dphi_gauss)
    chi_star, _ = chi_flow.step(chi_n, denergy_dchi_gauss)
    return phi_star, chi_star, lam


def run_graded(mesh: StructuredQuadMesh, mat: IsotropicElasticity,
               spec: InterpolationSpec, bc: BoundaryConditions,
               cfg: GradedConfig, on_iteration=None) -> tuple[GradedOptState, RunRecord]:
    """Run the graded optimization loop until both field increments fall
    below tolerance or the iteration cap is reached."""
    record = RunRecord(mode="graded")
    solver = StateSolver(mesh, mat, spec, bc)
    phase = PhaseFlow(mesh, cfg)
    chi_flow = ChiFlow(mesh, cfg, phase)
    areas = node_areas(mesh)
    area_total = float(areas.sum())

    phi = np.full(mesh.n_nodes, cfg.phi0)
    chi = project_chi(np.full(mesh.n_nodes, cfg.chi_start), phi)
    lam = 0.0
    u_flat = np.zeros(2 * mesh.n_nodes)
    delta_phi = math.inf
    delta_chi = math.inf
    n = 0

    try:
        while (delta_phi >= cfg.tol or delta_chi >= cfg.tol) and n < cfg.max_iter:
            n += 1
            state = solver.solve(phi, chi, x0=u_flat)
            u_flat = state.u_flat
            objective = (state.compliance + phase.interface_energy(phi)
                         + chi_flow.interface_energy(chi))

            strains = solver.kernel.strains(u_flat)
            quad = solver.kernel.bulk_energy_density(strains)
            phi_gauss = phase.kernel.gauss_values(phi)
            chi_gauss = np.minimum(phase.kernel.gauss_values(chi), phi_gauss)
            dphi_gauss = (grading_factor(chi_gauss, spec.beta)
                          * stiffness_scale_single_dphi(phi_gauss, spec) * quad)
            dchi_gauss = ((1.0 - 1.0 / spec.beta)
                          * stiffness_scale_single(phi_gauss, spec) * quad)

            phi_star, lam = phase.step(phi, dphi_gauss)
            chi_star, qt_max = chi_flow.step(chi, dchi_gauss)
            pre_residual = phase.volume_residual(phi_star)

            new_phi = project_unit_interval(phi_star)
            new_chi = project_chi(chi_star, new_phi)
            delta_phi = relative_increment(new_phi, phi)
            delta_chi = relative_increment(new_chi, chi)
            phi, chi = new_phi, new_chi

            violation = max(
                float((-phi).max(initial=0.0)),
                float((phi - 1.0).max(initial=0.0)),
                float((-chi).max(initial=0.0)),
                float((chi - phi).max(initial=0.0)),
            )
            volume = float(areas @ phi) / area_total
            m_chi = float(areas @ chi) / area_total
            record.rows.append(IterationRow(
                iteration=n, compliance=state.compliance, volume=volume,
                m_chi=m_chi, delta_phi=delta_phi, delta_chi=delta_chi,
                objective=objective, volume_residual_pre=pre_residual,
                bound_violation=violation, qt_max=qt_max))
            if on_iteration is not None:
                on_iteration(n, phi, chi)

        record.converged = delta_phi < cfg.tol and delta_chi < cfg.tol
        record.iterations = n
        final = solver.solve(phi, chi, x0=u_flat)
        record.final_compliance = final.compliance
        record.final_volume = float(areas @ phi) / area_total
        record.final_material_fraction = float(areas @ chi) / area_total
        state_out = GradedOptState(phi=phi, chi=chi, multiplier=lam,
                                   iteration=n, u=final.u)
        return state_out, record
    except SolverFailure as err:
        record.error = str(err)
        record.converged = False
        record.iterations = n
        record.final_volume = float(areas @ phi) / area_total
        record.final_material_fraction = float(areas @ chi) / area_total
        return GradedOptState(phi=phi, chi=chi, multiplier=lam, iteration=n), record
