"""Sparse symmetric solvers: Jacobi-preconditioned CG and the scalar saddle
solve used to enforce the volume constraint."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse


class SolverFailure(RuntimeError):
    """Iterative solve did not reach the requested residual.

    Carries the achieved relative residual in ``residual``.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class SingularConstraint(ValueError):
    """The volume-coupling column is orthogonal to its own lifted image."""


@dataclass(frozen=True)
class SparseSymmetricSystem:
    """A symmetric sparse matrix, positive definite on its free DOFs."""

    matrix: sparse.csr_matrix

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SparseSymmetricSystem":
        return cls(matrix=sparse.csr_matrix(np.asarray(dense, dtype=float)))


def solve_spd(system: SparseSymmetricSystem, rhs: np.ndarray,
              x0: np.ndarray | None = None, rel_tol: float = 1e-8,
              max_iter: int | None = None) -> np.ndarray:
    """Solve A x = b for SPD A with Jacobi-preconditioned CG.

    Convergence means ||b - A x|| <= rel_tol * ||b||. The iteration cap is
    10 * dimension unless overridden; hitting it raises SolverFailure with
    the achieved relative residual.
    """
    a = system.matrix
    b = np.asarray(rhs, dtype=float)
    n = system.dimension
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n)
    cap = 10 * n if max_iter is None else max_iter
    target = rel_tol * b_norm

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - a @ x
    diag = a.diagonal()
    if np.any(diag <= 0.0):
        raise ValueError("matrix diagonal must be positive for an SPD solve")
    inv_diag = 1.0 / diag

    z = r * inv_diag
    p = z.copy()
    rz = float(r @ z)
    for k in range(cap):
        r_norm = float(np.linalg.norm(r))
        if r_norm <= target:
            break
        ap = a @ p
        pap = float(p @ ap)
        if pap <= 0.0:
            raise SolverFailure(
                f"matrix not positive definite (p.Ap = {pap:g})",
                residual=r_norm / b_norm)
        alpha = rz / pap
        x += alpha * p
        if (k + 1) % 50 == 0:
            r = b - a @ x  # periodic refresh against recurrence drift
        else:
            r -= alpha * ap
        z = r * inv_diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    true_res = float(np.linalg.norm(b - a @ x))
    if true_res > target:
        raise SolverFailure(
            f"CG stalled at relative residual {true_res / b_norm:.3e} "
            f"after {cap} iterations (target {rel_tol:g})",
            residual=true_res / b_norm)
    return x


def solve_saddle_scalar(system: SparseSymmetricSystem, c: np.ndarray,
                        rhs: np.ndarray, r: float,
                        y2: np.ndarray | None = None,
                        x0: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Solve the saddle system ``A x + c lam = rhs`` subject to ``c.x = r``.

    Schur-complement form with a single scalar multiplier: two SPD solves
    A y1 = rhs and A y2 = c, then lam = (c.y1 - r) / (c.y2) and
    x = y1 - lam y2. A precomputed ``y2`` may be supplied when A is reused
    across steps.
    """
    c = np.asarray(c, dtype=float)
    y1 = solve_spd(system, rhs, x0=x0)
    if y2 is None:
        y2 = solve_spd(system, c)
    denom = float(c @ y2)
    scale = max(1.0, float(np.linalg.norm(c)) * float(np.linalg.norm(y2)))
    if abs(denom) <= 1e-14 * scale:
        raise SingularConstraint(
            f"volume-coupling column is degenerate (c.A^-1.c = {denom:g})")
    lam = (float(c @ y1) - float(r)) / denom
    x = y1 - lam * y2
    return x, lam
