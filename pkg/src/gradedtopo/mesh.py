"""Structured quadrilateral meshes, bilinear shape functions and Gauss rules.

All area integrals in the package run on the 2x2 Gauss rule, which is exact
for bilinear mass matrices on rectangles and adequate for stiffness terms.
Node numbering is row-major with x fastest, element numbering likewise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse

# Reference-square corner coordinates, counter-clockwise from (-1, -1).
_CORNER_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_CORNER_ETA = np.array([-1.0, -1.0, 1.0, 1.0])


def shape_functions(xi: float, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear shape functions and their reference-space gradients.

    Returns ``(values, grads)`` with ``values`` of shape (4,) and ``grads``
    of shape (4, 2) holding (d/dxi, d/deta) rows. Inputs are expected inside
    the reference square [-1, 1]^2; no clamping is performed (caller
    contract).
    """
    values = 0.25 * (1.0 + _CORNER_XI * xi) * (1.0 + _CORNER_ETA * eta)
    grads = np.empty((4, 2))
    grads[:, 0] = 0.25 * _CORNER_XI * (1.0 + _CORNER_ETA * eta)
    grads[:, 1] = 0.25 * _CORNER_ETA * (1.0 + _CORNER_XI * xi)
    return values, grads


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature points on the reference square (or segment) with weights."""

    points: np.ndarray
    weights: np.ndarray


def gauss_2x2() -> QuadratureRule:
    """Tensor-product 2-point Gauss rule on [-1, 1]^2 (weights sum to 4)."""
    g = 1.0 / np.sqrt(3.0)
    pts = np.array([[-g, -g], [g, -g], [g, g], [-g, g]])
    return QuadratureRule(points=pts, weights=np.ones(4))


def gauss_segment() -> QuadratureRule:
    """2-point Gauss rule on the reference segment [-1, 1]."""
    g = 1.0 / np.sqrt(3.0)
    return QuadratureRule(points=np.array([-g, g]), weights=np.ones(2))


@dataclass(frozen=True)
class StructuredQuadMesh:
    """Uniform grid of bilinear quadrilaterals on [0, lx] x [0, ly].

    ``nodes`` has shape (n_nodes, 2); ``elements`` has shape (n_elements, 4)
    with counter-clockwise connectivity. ``boundary_edges`` maps each of the
    tags left/right/bottom/top to an (n_edges, 2) array of node pairs ordered
    along increasing coordinate. Instances are treated as immutable after
    construction.
    """

    nx: int
    ny: int
    lx: float
    ly: float
    nodes: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)
    boundary_edges: dict = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def area(self) -> float:
        return self.lx * self.ly

    def node_index(self, i: int, j: int) -> int:
        return j * (self.nx + 1) + i


def build_mesh(nx: int, ny: int, lx: float, ly: float) -> StructuredQuadMesh:
    """Build a uniform quadrilateral mesh with nx x ny elements.

    Node (i, j) sits at (i*lx/nx, j*ly/ny); element (i, j) connects nodes
    counter-clockwise starting from its lower-left corner.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"element counts must be >= 1, got nx={nx}, ny={ny}")
    if lx <= 0.0 or ly <= 0.0:
        raise ValueError(f"extents must be positive, got lx={lx}, ly={ly}")

    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
    ii = ii.ravel()
    jj = jj.ravel()
    n0 = jj * (nx + 1) + ii
    elements = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]).astype(np.int64)

    bottom = np.arange(nx)
    top = (nx + 1) * ny + np.arange(nx)
    left = (nx + 1) * np.arange(ny)
    right = (nx + 1) * np.arange(ny) + nx
    boundary_edges = {
        "bottom": np.column_stack([bottom, bottom + 1]).astype(np.int64),
        "top": np.column_stack([top, top + 1]).astype(np.int64),
        "left": np.column_stack([left, left + nx + 1]).astype(np.int64),
        "right": np.column_stack([right, right + nx + 1]).astype(np.int64),
    }
    return StructuredQuadMesh(
        nx=nx, ny=ny, lx=float(lx), ly=float(ly),
        nodes=nodes, elements=elements, boundary_edges=boundary_edges,
    )


def jacobian_determinants(mesh: StructuredQuadMesh,
                          rule: QuadratureRule | None = None) -> np.ndarray:
    """Isoparametric Jacobian determinant per element and quadrature point."""
    rule = rule or gauss_2x2()
    coords = mesh.nodes[mesh.elements]  # (ne, 4, 2)
    dets = np.empty((mesh.n_elements, len(rule.weights)))
    for q, (xi, eta) in enumerate(rule.points):
        _, grads = shape_functions(xi, eta)
        jac = np.einsum("nic,ig->ncg", coords, grads)
        dets[:, q] = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    return dets


class ScalarKernel:
    """Precomputed quadrature data for nodal scalar fields on a uniform mesh.

    Caches shape-function values/gradients at the 2x2 Gauss points and the
    weighted Jacobian so field interpolation, nodal scatter and domain
    integrals are plain array products.
    """

    def __init__(self, mesh: StructuredQuadMesh):
        self.mesh = mesh
        rule = gauss_2x2()
        self.rule = rule
        nq = len(rule.weights)
        self.n_values = np.empty((nq, 4))
        self.grads_xy = np.empty((nq, 4, 2))
        for q, (xi, eta) in enumerate(rule.points):
            values, grads = shape_functions(xi, eta)
            self.n_values[q] = values
            self.grads_xy[q, :, 0] = grads[:, 0] * (2.0 / mesh.dx)
            self.grads_xy[q, :, 1] = grads[:, 1] * (2.0 / mesh.dy)
        det = 0.25 * mesh.dx * mesh.dy
        self.w_det = rule.weights * det  # (nq,)

    def gauss_values(self, field_values: np.ndarray) -> np.ndarray:
        """Interpolate a nodal field to the Gauss points, shape (ne, nq)."""
        return field_values[self.mesh.elements] @ self.n_values.T

    def scatter(self, integrand: np.ndarray) -> np.ndarray:
        """Assemble the nodal vector of integral(N_i * s) for s given at
        Gauss points as an (ne, nq) array."""
        weighted = integrand * self.w_det  # (ne, nq)
        per_node = weighted @ self.n_values  # (ne, 4)
        return np.bincount(self.mesh.elements.ravel(), weights=per_node.ravel(),
                           minlength=self.mesh.n_nodes)

    def integrate(self, integrand: np.ndarray) -> float:
        """Domain integral of a Gauss-point sampled quantity."""
        return float((integrand * self.w_det).sum())


def _assemble_scalar(mesh: StructuredQuadMesh, element_matrix: np.ndarray):
    conn = mesh.elements
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    vals = np.broadcast_to(element_matrix.ravel(), (mesh.n_elements, 16)).ravel()
    mat = sparse.coo_matrix((vals, (rows, cols)),
                            shape=(mesh.n_nodes, mesh.n_nodes))
    return mat.tocsr()


def scalar_mass_matrix(mesh: StructuredQuadMesh) -> sparse.csr_matrix:
    """Consistent mass matrix integral(N_i N_j) on the whole mesh."""
    kern = ScalarKernel(mesh)
    me = np.einsum("q,qi,qj->ij", kern.w_det, kern.n_values, kern.n_values)
    return _assemble_scalar(mesh, me)


def scalar_stiffness_matrix(mesh: StructuredQuadMesh) -> sparse.csr_matrix:
    """Laplacian-type matrix integral(grad N_i . grad N_j)."""
    kern = ScalarKernel(mesh)
    ke = np.einsum("q,qic,qjc->ij", kern.w_det, kern.grads_xy, kern.grads_xy)
    return _assemble_scalar(mesh, ke)


def node_areas(mesh: StructuredQuadMesh) -> np.ndarray:
    """Nodal weights integral(N_i), i.e. consistent lumped node areas."""
    kern = ScalarKernel(mesh)
    per_elem = np.broadcast_to(kern.w_det @ kern.n_values, (mesh.n_elements, 4))
    return np.bincount(mesh.elements.ravel(), weights=per_elem.ravel(),
                       minlength=mesh.n_nodes)


def field_mean(mesh: StructuredQuadMesh, field_values: np.ndarray) -> float:
    """Consistent-mass-weighted mean of a nodal field over the domain."""
    a = node_areas(mesh)
    return float(a @ field_values) / float(a.sum())
