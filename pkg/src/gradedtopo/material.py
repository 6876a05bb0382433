"""Constitutive laws: isotropic elasticity, density interpolation with a
penalized void residual, linear stiffness grading, and the double-well
penalty on intermediate densities.

The stiffness at a point is ``grade(chi) * ramp(phi) * C_bulk`` where
``ramp(phi) = phi^p + gamma_phi^2 (1-phi)^p`` keeps voids very soft and
``grade(chi) = 1/beta + (1 - 1/beta) chi`` blends the soft material
(stiffness C_bulk / beta) into the fully dense one. At ``beta = 1`` the
grading factor is identically one, so graded and single-material models
coincide exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def lame_from_E_nu(young: float, poisson: float) -> tuple[float, float]:
    """Lame parameters (lambda, mu) from Young modulus and Poisson ratio."""
    if young <= 0.0:
        raise ValueError(f"Young modulus must be positive, got {young}")
    if not -1.0 < poisson < 0.5:
        raise ValueError(f"Poisson ratio must lie in (-1, 0.5), got {poisson}")
    lam = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson))
    mu = young / (2.0 * (1.0 + poisson))
    return lam, mu


@dataclass(frozen=True)
class IsotropicElasticity:
    """Bulk material constants in N/mm^2 (unit thickness 1 mm)."""

    young: float
    poisson: float
    lame_lambda: float
    lame_mu: float

    @classmethod
    def from_young_poisson(cls, young: float, poisson: float) -> "IsotropicElasticity":
        lam, mu = lame_from_E_nu(young, poisson)
        return cls(young=young, poisson=poisson, lame_lambda=lam, lame_mu=mu)


def elasticity_matrix(mat: IsotropicElasticity) -> np.ndarray:
    """Voigt 3x3 matrix of ``lam tr(eps) I + 2 mu eps`` for 2D strain
    [e_xx, e_yy, 2 e_xy]."""
    lam, mu = mat.lame_lambda, mat.lame_mu
    return np.array([
        [lam + 2.0 * mu, lam, 0.0],
        [lam, lam + 2.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ])


@dataclass(frozen=True)
class InterpolationSpec:
    """Density-interpolation constants.

    ``penalty`` is the ramp exponent, ``gamma_phi`` the diffuse-interface
    thickness whose square is the residual void stiffness fraction, and
    ``beta`` the softening divisor (soft stiffness = bulk / beta).
    """

    penalty: float = 3.0
    gamma_phi: float = 0.02
    beta: float = 1.0

    def __post_init__(self):
        if self.penalty <= 0.0:
            raise ValueError(f"penalty must be positive, got {self.penalty}")
        if not 0.0 < self.gamma_phi < 1.0:
            raise ValueError(
                f"gamma_phi must lie in (0, 1), got {self.gamma_phi}")
        if self.beta < 1.0:
            raise ValueError(f"softening factor must be >= 1, got {self.beta}")

    @property
    def residual(self) -> float:
        return self.gamma_phi ** 2


def stiffness_scale_single(phi, spec: InterpolationSpec):
    """Scalar multiple of the bulk tensor: phi^p + gamma^2 (1-phi)^p."""
    p = spec.penalty
    return phi ** p + spec.residual * (1.0 - phi) ** p


def stiffness_scale_single_dphi(phi, spec: InterpolationSpec):
    """Derivative of the single-material ramp with respect to phi."""
    p = spec.penalty
    return p * phi ** (p - 1.0) - p * spec.residual * (1.0 - phi) ** (p - 1.0)


def grading_factor(chi, beta: float):
    """Linear blend 1/beta + (1 - 1/beta) chi; identically 1 at beta = 1."""
    inv = 1.0 / beta
    return inv + (1.0 - inv) * chi


def stiffness_scale_graded(phi, chi, spec: InterpolationSpec):
    """Scalar multiple of the bulk tensor for the graded model."""
    _check_admissible(phi, chi)
    return grading_factor(chi, spec.beta) * stiffness_scale_single(phi, spec)


def _check_admissible(phi, chi):
    if np.any(np.asarray(chi) > np.asarray(phi)):
        raise ValueError("grading field chi must satisfy chi <= phi")


def material_tensor_single(phi: float, mat: IsotropicElasticity,
                           spec: InterpolationSpec) -> np.ndarray:
    """Interpolated elasticity matrix for the single-material model."""
    return stiffness_scale_single(phi, spec) * elasticity_matrix(mat)


def material_tensor_graded(phi: float, chi: float, mat: IsotropicElasticity,
                           spec: InterpolationSpec) -> np.ndarray:
    """Interpolated elasticity matrix for the graded model."""
    return stiffness_scale_graded(phi, chi, spec) * elasticity_matrix(mat)


def _strain_voigt(strain) -> np.ndarray:
    strain = np.asarray(strain, dtype=float)
    if strain.shape != (2, 2):
        raise ValueError(f"strain must be a 2x2 tensor, got shape {strain.shape}")
    return np.array([strain[0, 0], strain[1, 1], strain[0, 1] + strain[1, 0]])


def bulk_quadratic_form(strain, mat: IsotropicElasticity) -> float:
    """(C_bulk eps) : eps for a symmetric 2x2 strain tensor."""
    v = _strain_voigt(strain)
    return float(v @ elasticity_matrix(mat) @ v)


def energy_density_single(phi: float, strain, mat: IsotropicElasticity,
                          spec: InterpolationSpec) -> float:
    """sigma(phi) : eps, the elastic energy density of the single model."""
    return stiffness_scale_single(phi, spec) * bulk_quadratic_form(strain, mat)


def energy_density_graded(phi: float, chi: float, strain,
                          mat: IsotropicElasticity,
                          spec: InterpolationSpec) -> float:
    """sigma(phi, chi) : eps for the graded model."""
    return stiffness_scale_graded(phi, chi, spec) * bulk_quadratic_form(strain, mat)


def denergy_dphi_single(phi: float, strain, mat: IsotropicElasticity,
                        spec: InterpolationSpec) -> float:
    """Derivative of the single-material energy density in phi."""
    return stiffness_scale_single_dphi(phi, spec) * bulk_quadratic_form(strain, mat)


def denergy_dphi_graded(phi: float, chi: float, strain,
                        mat: IsotropicElasticity,
                        spec: InterpolationSpec) -> float:
    """Derivative of the graded energy density in phi.

    The grading factor does not depend on phi, so this is the graded
    stiffness scale differentiated through the ramp only; the (1-phi) term
    carries the chain-rule minus sign.
    """
    _check_admissible(phi, chi)
    return (grading_factor(chi, spec.beta)
            * stiffness_scale_single_dphi(phi, spec)
            * bulk_quadratic_form(strain, mat))


def denergy_dchi_graded(phi: float, chi: float, strain,
                        mat: IsotropicElasticity,
                        spec: InterpolationSpec) -> float:
    """Derivative of the graded energy density in chi.

    Equals (1 - 1/beta) * ramp(phi) * (C_bulk eps):eps; identically zero
    when beta = 1 because the prefactor vanishes exactly.
    """
    _check_admissible(phi, chi)
    prefactor = 1.0 - 1.0 / spec.beta
    return (prefactor * stiffness_scale_single(phi, spec)
            * bulk_quadratic_form(strain, mat))


def double_well(phi):
    """Double-well penalty (phi - phi^2)^2 and its derivative.

    Wells sit at 0 and 1; the derivative is 2 (phi - phi^2)(1 - 2 phi).
    """
    core = phi - phi ** 2
    value = core ** 2
    derivative = 2.0 * core * (1.0 - 2.0 * phi)
    return value, derivative
