"""Quadratic finite elements for the Helmholtz operator on triangulated strips.

Assembles the complex symmetric system (S - kappa^2 M) u = f over the P2
Lagrange space attached to a :class:`~screenguide.meshing.Mesh`.  All boundary
conditions here are natural (homogeneous Neumann); radiation conditions are
the business of :mod:`screenguide.scattering`, which adds its blocks to the
assembled system before the solve.

Seam duplication is inherited from the mesh: nodes on the two faces of a
screen are distinct mesh nodes, so the element loop needs no special casing
and the screen faces decouple automatically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericalError
from .meshing import Mesh

log = logging.getLogger(__name__)

# Six-point Dunavant rule, exact for degree-4 polynomials on a triangle.
# Barycentric points and weights (weights sum to 1, i.e. are relative to the
# triangle area).  P2 x P2 products are quartic, so mass and stiffness
# integrals are exact up to roundoff on affine elements.
_DUN6_A = 0.108103018168070
_DUN6_B = 0.445948490915965
_DUN6_C = 0.816847572980459
_DUN6_D = 0.091576213509771
_QP_BARY = np.array([
    [_DUN6_A, _DUN6_B, _DUN6_B],
    [_DUN6_B, _DUN6_A, _DUN6_B],
    [_DUN6_B, _DUN6_B, _DUN6_A],
    [_DUN6_C, _DUN6_D, _DUN6_D],
    [_DUN6_D, _DUN6_C, _DUN6_D],
    [_DUN6_D, _DUN6_D, _DUN6_C],
])
_QP_W = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)


def shape_values(lam):
    """P2 shape functions at barycentric coordinates lam (..., 3).

    Local ordering: three vertex functions, then the midpoints of edges
    (1,2), (2,3), (3,1) -- the same ordering as the mesh connectivity.
    """
    l1, l2, l3 = lam[..., 0], lam[..., 1], lam[..., 2]
    return np.stack([
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        l3 * (2.0 * l3 - 1.0),
        4.0 * l1 * l2,
        4.0 * l2 * l3,
        4.0 * l3 * l1,
    ], axis=-1)


def _shape_grads_bary(lam):
    """Gradients of the six shapes w.r.t. (lambda_1, lambda_2, lambda_3)."""
    l1, l2, l3 = lam[..., 0], lam[..., 1], lam[..., 2]
    z = np.zeros_like(l1)
    g = np.empty(lam.shape[:-1] + (6, 3))
    g[..., 0, :] = np.stack([4.0 * l1 - 1.0, z, z], axis=-1)
    g[..., 1, :] = np.stack([z, 4.0 * l2 - 1.0, z], axis=-1)
    g[..., 2, :] = np.stack([z, z, 4.0 * l3 - 1.0], axis=-1)
    g[..., 3, :] = np.stack([4.0 * l2, 4.0 * l1, z], axis=-1)
    g[..., 4, :] = np.stack([z, 4.0 * l3, 4.0 * l2], axis=-1)
    g[..., 5, :] = np.stack([4.0 * l3, z, 4.0 * l1], axis=-1)
    return g


@dataclass(frozen=True)
class DofMap:
    """Degree-of-freedom layout: one dof per mesh node (vertex and midpoint).

    Because the mesh already stores seam faces as separate nodes, the map is
    a plain enumeration; ``tri_dofs`` gives the six dofs of each triangle in
    local order.
    """

    n_dofs: int
    tri_dofs: np.ndarray  # (n_triangles, 6) int

    @classmethod
    def from_mesh(cls, mesh: Mesh) -> "DofMap":
        tri_dofs = np.hstack([np.asarray(mesh.triangles, dtype=np.int64),
                              np.asarray(mesh.tri_midnodes, dtype=np.int64)])
        return cls(n_dofs=mesh.n_nodes, tri_dofs=tri_dofs)


@dataclass
class SparseComplexSystem:
    """Assembled complex symmetric system (no conjugation anywhere)."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    kappa: float


def _element_geometry(mesh: Mesh):
    """Per-triangle corner coordinates, Jacobian data and areas."""
    xy = np.asarray(mesh.node_xy)
    tris = np.asarray(mesh.triangles)
    p1, p2, p3 = xy[tris[:, 0]], xy[tris[:, 1]], xy[tris[:, 2]]
    # gradients of barycentric coordinates: grad lambda_i = rot90(opposite
    # edge) / (2 area)
    det = ((p2[:, 0] - p1[:, 0]) * (p3[:, 1] - p1[:, 1])
           - (p3[:, 0] - p1[:, 0]) * (p2[:, 1] - p1[:, 1]))
    area = 0.5 * det
    if np.any(area <= 0.0):
        bad = int(np.argmin(area))
        raise NumericalError(f"triangle {bad} has non-positive area {area[bad]:.3e}")
    glam = np.empty((len(tris), 3, 2))
    glam[:, 0, 0] = p2[:, 1] - p3[:, 1]
    glam[:, 0, 1] = p3[:, 0] - p2[:, 0]
    glam[:, 1, 0] = p3[:, 1] - p1[:, 1]
    glam[:, 1, 1] = p1[:, 0] - p3[:, 0]
    glam[:, 2, 0] = p1[:, 1] - p2[:, 1]
    glam[:, 2, 1] = p2[:, 0] - p1[:, 0]
    glam /= det[:, None, None]
    return area, glam


def assemble_stiffness_mass(mesh: Mesh):
    """P2 stiffness and mass matrices (real CSR) over all triangles."""
    dof_map = DofMap.from_mesh(mesh)
    area, glam = _element_geometry(mesh)
    n_tri = len(dof_map.tri_dofs)

    # mass: sum_q w_q N_i N_q N_j * area  (exact, quartic integrand)
    N = shape_values(_QP_BARY)                       # (6q, 6)
    m_ref = np.einsum("q,qi,qj->ij", _QP_W, N, N)    # reference, unit weight
    Me = m_ref[None, :, :] * area[:, None, None]

    # stiffness: grads of shapes in physical coords depend on the element
    G = _shape_grads_bary(_QP_BARY)                  # (q, 6, 3)
    # physical gradient: (q, t, 6, 2) = G (q,6,3) . glam (t,3,2)
    Gp = np.einsum("qis,tsd->tqid", G, glam)
    Se = np.einsum("q,tqid,tqjd,t->tij", _QP_W, Gp, Gp, area)

    rows = np.repeat(dof_map.tri_dofs, 6, axis=1).ravel()
    cols = np.tile(dof_map.tri_dofs, (1, 6)).ravel()
    n = dof_map.n_dofs
    S = sp.coo_matrix((Se.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    log.debug("assembled S, M: %d dofs, %d triangles, nnz %d", n, n_tri, S.nnz)
    return S, M


def assemble(mesh: Mesh, kappa: float) -> SparseComplexSystem:
    """Helmholtz system S - kappa^2 M with natural boundary conditions.

    The right-hand side starts at zero; transparent-boundary blocks and the
    incident-wave load are added by the scattering module.
    """
    if not kappa > 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    S, M = assemble_stiffness_mass(mesh)
    A = (S - (kappa * kappa) * M).astype(np.complex128).tocsr()
    A.eliminate_zeros()
    dof_map = DofMap.from_mesh(mesh)
    rhs = np.zeros(dof_map.n_dofs, dtype=np.complex128)
    return SparseComplexSystem(matrix=A, rhs=rhs, dof_map=dof_map, kappa=float(kappa))


def solve_linear(system: SparseComplexSystem) -> np.ndarray:
    """Direct sparse solve with residual verification.

    Uses an LU factorization with fill-reducing column ordering.  Raises
    :class:`NumericalError` when the factorization reports singularity or the
    relative residual exceeds 1e-10, quoting a diagonal-ratio condition
    diagnostic in the message.
    """
    A = system.matrix.tocsc()
    b = system.rhs
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return np.zeros_like(b)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise NumericalError(f"sparse factorization failed: {exc}") from exc
    x = lu.solve(b)
    resid = np.linalg.norm(A @ x - b) / nb
    if not resid <= 1e-10:
        d = np.abs(lu.U.diagonal())
        cond = float(d.max() / d.min()) if d.min() > 0.0 else np.inf
        raise NumericalError(
            f"linear solve residual {resid:.3e} exceeds 1e-10 "
            f"(diagonal condition estimate {cond:.3e})")
    log.debug("solved %d dofs, residual %.3e", len(b), resid)
    return x
