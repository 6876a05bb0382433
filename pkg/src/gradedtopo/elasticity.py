"""Assembly and solution of the linear-elastic state equation on interpolated
stiffness fields, plus compliance evaluation.

The displacement problem is self-adjoint for the compliance objective, so the
state solution doubles as the adjoint everywhere downstream; no separate
adjoint solve exists in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse

from .linalg import SparseSymmetricSystem, solve_spd
from .material import (
    InterpolationSpec,
    IsotropicElasticity,
    elasticity_matrix,
    stiffness_scale_graded,
    stiffness_scale_single,
)
from .mesh import ScalarKernel, StructuredQuadMesh, gauss_segment


@dataclass(frozen=True)
class BoundaryConditions:
    """Dirichlet constraints and Neumann edge tractions.

    ``dirichlet`` holds (node, component, value) triples with component 0
    for x and 1 for y; ``neumann`` holds ((node_a, node_b), (gx, gy)) edge
    loads in N/mm. The Dirichlet set must be nonempty so the reduced
    operator is positive definite.
    """

    dirichlet: tuple = field(default=())
    neumann: tuple = field(default=())

    def __post_init__(self):
        if len(self.dirichlet) == 0:
            raise ValueError("at least one Dirichlet constraint is required")

    def fixed_dofs(self, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (dof indices, prescribed values), duplicates last-wins."""
        values: dict[int, float] = {}
        for node, comp, value in self.dirichlet:
            if comp not in (0, 1):
                raise ValueError(f"component must be 0 or 1, got {comp}")
            if not 0 <= node < n_nodes:
                raise ValueError(f"node {node} outside mesh")
            values[2 * node + comp] = float(value)
        dofs = np.array(sorted(values), dtype=np.int64)
        return dofs, np.array([values[d] for d in dofs])


def fix_edge(mesh: StructuredQuadMesh, tag: str, components: str = "both",
             value: float = 0.0) -> list[tuple[int, int, float]]:
    """Dirichlet triples clamping one boundary edge of the mesh."""
    edges = mesh.boundary_edges[tag]
    nodes = np.unique(edges)
    comps = {"x": (0,), "y": (1,), "both": (0, 1)}[components]
    return [(int(n), c, value) for n in nodes for c in comps]


def edge_tractions(mesh: StructuredQuadMesh, tag: str, g: tuple[float, float],
                   extent: float | None = None,
                   anchor: str = "start") -> list[tuple[tuple[int, int], tuple[float, float]]]:
    """Neumann entries applying traction g to (part of) a boundary edge.

    ``extent`` selects a run of whole element edges measured from the
    low-coordinate end of the boundary (``anchor='start'``) or the high end
    (``'end'``); the extent is rounded to a whole number of edges.
    """
    edges = mesh.boundary_edges[tag]
    if extent is not None:
        h = mesh.dy if tag in ("left", "right") else mesh.dx
        count = max(1, int(round(extent / h)))
        count = min(count, len(edges))
        edges = edges[:count] if anchor == "start" else edges[-count:]
    return [((int(a), int(b)), (float(g[0]), float(g[1]))) for a, b in edges]


@dataclass(frozen=True)
class StateSolution:
    """Nodal displacements (n_nodes, 2) and the compliance f.u in N*mm."""

    u: np.ndarray
    compliance: float

    @property
    def u_flat(self) -> np.ndarray:
        return self.u.ravel()


class StiffnessKernel:
    """Element-level stiffness data for a uniform mesh and bulk material.

    Because every interpolated tensor is a scalar multiple of the bulk one,
    the per-Gauss-point 8x8 matrices are computed once and scaled per element
    during assembly.
    """

    def __init__(self, mesh: StructuredQuadMesh, mat: IsotropicElasticity):
        self.mesh = mesh
        self.mat = mat
        self.scalar = ScalarKernel(mesh)
        kern = self.scalar
        nq = len(kern.w_det)

        self.b_matrices = np.zeros((nq, 3, 8))
        for q in range(nq):
            dn = kern.grads_xy[q]  # (4, 2)
            b = self.b_matrices[q]
            b[0, 0::2] = dn[:, 0]
            b[1, 1::2] = dn[:, 1]
            b[2, 0::2] = dn[:, 1]
            b[2, 1::2] = dn[:, 0]

        d_bulk = elasticity_matrix(mat)
        self.d_bulk = d_bulk
        self.ke_q = np.einsum("q,qci,cd,qdj->qij",
                              kern.w_det, self.b_matrices, d_bulk,
                              self.b_matrices)

        conn = mesh.elements
        edofs = np.empty((mesh.n_elements, 8), dtype=np.int64)
        edofs[:, 0::2] = 2 * conn
        edofs[:, 1::2] = 2 * conn + 1
        self.edofs = edofs
        self.coo_rows = np.repeat(edofs, 8, axis=1).ravel()
        self.coo_cols = np.tile(edofs, (1, 8)).ravel()
        self.ndof = 2 * mesh.n_nodes

    def scales(self, phi: np.ndarray, chi: np.ndarray | None,
               spec: InterpolationSpec) -> np.ndarray:
        """Stiffness scale factors at every Gauss point, shape (ne, nq)."""
        phi_g = self.scalar.gauss_values(phi)
        if chi is None:
            return stiffness_scale_single(phi_g, spec)
        chi_g = self.scalar.gauss_values(chi)
        # Interpolation can leave chi_g a hair above phi_g at machine
        # precision even for admissible nodal fields.
        chi_g = np.minimum(chi_g, phi_g)
        return stiffness_scale_graded(phi_g, chi_g, spec)

    def element_values(self, scales: np.ndarray) -> np.ndarray:
        """Per-element 8x8 stiffness entries, flattened for COO assembly."""
        return np.einsum("eq,qij->eij", scales, self.ke_q).ravel()

    def assemble(self, scales: np.ndarray) -> sparse.csr_matrix:
        vals = self.element_values(scales)
        mat = sparse.coo_matrix((vals, (self.coo_rows, self.coo_cols)),
                                shape=(self.ndof, self.ndof))
        return mat.tocsr()

    def strains(self, u_flat: np.ndarray) -> np.ndarray:
        """Voigt strains [e_xx, e_yy, 2 e_xy] at Gauss points, (ne, nq, 3)."""
        u_e = u_flat[self.edofs]  # (ne, 8)
        return np.einsum("qci,ei->eqc", self.b_matrices, u_e)

    def bulk_energy_density(self, strains: np.ndarray) -> np.ndarray:
        """(C_bulk eps):eps at every Gauss point, shape (ne, nq)."""
        return np.einsum("eqc,cd,eqd->eq", strains, self.d_bulk, strains)


def assemble_stiffness(mesh: StructuredQuadMesh, phi: np.ndarray,
                       chi: np.ndarray | None, mat: IsotropicElasticity,
                       spec: InterpolationSpec) -> SparseSymmetricSystem:
    """Assemble the global stiffness matrix on nodal phi (and chi) fields."""
    if phi.shape != (mesh.n_nodes,):
        raise ValueError(
            f"phi has {phi.shape[0]} values for a mesh with {mesh.n_nodes} nodes")
    if chi is not None and chi.shape != (mesh.n_nodes,):
        raise ValueError(
            f"chi has {chi.shape[0]} values for a mesh with {mesh.n_nodes} nodes")
    kernel = StiffnessKernel(mesh, mat)
    return SparseSymmetricSystem(kernel.assemble(kernel.scales(phi, chi, spec)))


def assemble_load(mesh: StructuredQuadMesh, bc: BoundaryConditions) -> np.ndarray:
    """Consistent nodal load vector from the Neumann edge tractions."""
    f = np.zeros(2 * mesh.n_nodes)
    rule = gauss_segment()
    # Linear shape functions on a straight edge: each endpoint carries half
    # of g * length, which the 2-point rule reproduces exactly.
    for (a, b), g in bc.neumann:
        length = float(np.linalg.norm(mesh.nodes[b] - mesh.nodes[a]))
        for point, weight in zip(rule.points, rule.weights):
            na = 0.5 * (1.0 - point)
            nb = 0.5 * (1.0 + point)
            factor = 0.5 * length * weight
            f[2 * a:2 * a + 2] += factor * na * np.asarray(g)
            f[2 * b:2 * b + 2] += factor * nb * np.asarray(g)
    return f


class StateSolver:
    """Cached state-equation solver for repeated solves on one problem.

    Precomputes the element kernel, the Dirichlet reduction and the load
    vector; ``solve`` accepts the previous displacement as warm start for
    the conjugate-gradient iteration.
    """

    def __init__(self, mesh: StructuredQuadMesh, mat: IsotropicElasticity,
                 spec: InterpolationSpec, bc: BoundaryConditions):
        self.mesh = mesh
        self.spec = spec
        self.kernel = StiffnessKernel(mesh, mat)
        self.bc = bc

        ndof = self.kernel.ndof
        fixed, values = bc.fixed_dofs(mesh.n_nodes)
        self.fixed = fixed
        self.fixed_values = values
        free_mask = np.ones(ndof, dtype=bool)
        free_mask[fixed] = False
        self.free = np.flatnonzero(free_mask)
        self.n_free = len(self.free)

        reduced_index = -np.ones(ndof, dtype=np.int64)
        reduced_index[self.free] = np.arange(self.n_free)
        rows_red = reduced_index[self.kernel.coo_rows]
        cols_red = reduced_index[self.kernel.coo_cols]
        self._keep = (rows_red >= 0) & (cols_red >= 0)
        self._rows_red = rows_red[self._keep]
        self._cols_red = cols_red[self._keep]
        self._homogeneous = bool(np.all(values == 0.0))

        self.load = assemble_load(mesh, bc)

    def reduced_system(self, phi: np.ndarray,
                       chi: np.ndarray | None) -> tuple[SparseSymmetricSystem, np.ndarray]:
        scales = self.kernel.scales(phi, chi, self.spec)
        vals = self.kernel.element_values(scales)
        k_red = sparse.coo_matrix(
            (vals[self._keep], (self._rows_red, self._cols_red)),
            shape=(self.n_free, self.n_free)).tocsr()
        rhs = self.load[self.free].copy()
        if not self._homogeneous:
            k_full = sparse.coo_matrix(
                (vals, (self.kernel.coo_rows, self.kernel.coo_cols)),
                shape=(self.kernel.ndof, self.kernel.ndof)).tocsr()
            rhs -= k_full[self.free][:, self.fixed] @ self.fixed_values
        return SparseSymmetricSystem(k_red), rhs

    def solve(self, phi: np.ndarray, chi: np.ndarray | None = None,
              x0: np.ndarray | None = None) -> StateSolution:
        system, rhs = self.reduced_system(phi, chi)
        guess = None if x0 is None else np.asarray(x0).ravel()[self.free]
        u_free = solve_spd(system, rhs, x0=guess)
        u = np.zeros(self.kernel.ndof)
        u[self.free] = u_free
        u[self.fixed] = self.fixed_values
        compliance = float(self.load @ u)
        return StateSolution(u=u.reshape(-1, 2), compliance=compliance)


def solve_state(mesh: StructuredQuadMesh, phi: np.ndarray,
                chi: np.ndarray | None, mat: IsotropicElasticity,
                spec: InterpolationSpec, bc: BoundaryConditions,
                x0: np.ndarray | None = None) -> StateSolution:
    """Solve the state equation once; see StateSolver for repeated solves."""
    return StateSolver(mesh, mat, spec, bc).solve(phi, chi, x0=x0)
