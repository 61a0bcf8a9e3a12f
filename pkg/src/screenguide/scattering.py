"""Piston-mode scattering through perforated screens in a 2D waveguide.

The truncated strip carries modal Dirichlet-to-Neumann (DtN) conditions on
the artificial boundaries at z = -Z and z = +Z.  With the transverse basis
phi_0 = 1, phi_n = sqrt(2) cos(n pi y) on (0,1), the axial rates are

    gamma_0 = -i kappa,        gamma_n = sqrt(n^2 pi^2 - kappa^2)  (n >= 1),

so below the first cutoff (kappa < pi) only the piston mode propagates and
every other mode decays evanescently.  The solve is for the total field: the
incident wave e^{i kappa (z+L)} enters through the left boundary as an
inhomogeneous DtN load.  Reflection and transmission amplitudes follow the
shifted convention in which the no-screen guide has R = 0, T = e^{2 i kappa L},
obtained by back-propagating the boundary traces from +-Z to the screen
positions +-L analytically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import NumericalError, UnsupportedRegimeError
from .fem import SparseComplexSystem, assemble, shape_values, solve_linear
from .meshing import (Mesh, TAG_GAMMA_MINUS, TAG_GAMMA_PLUS,
                      WaveguideGeometry2D, build_mesh)

log = logging.getLogger(__name__)

# 10-point Gauss-Legendre rule on [0, 1]; overkill for P2 traces but makes
# the modal integrals against cos(n pi y) exact to machine precision for
# every mode order used in practice.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL_T = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class ModalBasis:
    """Transverse cosine basis and axial decay/oscillation rates."""

    n_modes: int
    kappa: float
    gammas: np.ndarray  # (n_modes,) complex, gammas[0] = -i kappa

    def phi(self, n: int, y):
        if n == 0:
            return np.ones_like(y)
        return np.sqrt(2.0) * np.cos(n * np.pi * np.asarray(y))


def modal_rates(kappa: float, n_modes: int) -> ModalBasis:
    """Axial rates of the first ``n_modes`` guide modes at frequency kappa.

    Only the single-propagating-mode regime kappa < pi is supported; above
    the first cutoff the piston-mode scattering coefficients stop describing
    the full far field.
    """
    if not 0.0 < kappa < np.pi:
        raise UnsupportedRegimeError(
            f"kappa={kappa:.6g} outside the single-mode band (0, pi)")
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    n = np.arange(n_modes)
    gammas = np.empty(n_modes, dtype=np.complex128)
    gammas[0] = -1j * kappa
    if n_modes > 1:
        gammas[1:] = np.sqrt(n[1:] ** 2 * np.pi ** 2 - kappa ** 2)
    return ModalBasis(n_modes=int(n_modes), kappa=float(kappa), gammas=gammas)


@dataclass
class ScatteringResult:
    """Output of one scattering solve.

    ``amplitude_mid`` is the piston content of the trace at z = 0, i.e.
    int_0^1 u(0, y) dy; at a resonance of the inter-screen cavity it blows up
    like the resonant-mode amplitude while R, T stay bounded.
    """

    R: complex
    T: complex
    energy_residual: float
    amplitude_mid: complex
    field: Optional[np.ndarray] = None
    mesh: Optional[Mesh] = None
    kappa: Optional[float] = None
    L: Optional[float] = None


def _boundary_edges(mesh: Mesh, tag: str):
    tags = np.asarray(mesh.boundary_tags)
    sel = np.nonzero(tags == tag)[0]
    return np.asarray(mesh.boundary_edges)[sel]


def _mode_load_vectors(mesh: Mesh, basis: ModalBasis, tag: str):
    """Trace integrals m_n[dof] = int_Gamma N_dof(y) phi_n(y) dy.

    Returns (support_dofs, B) with B of shape (n_modes, len(support_dofs)).
    The quadrature is 10-point Gauss-Legendre per boundary edge, exact for
    P2 traces against every mode used.
    """
    edges = _boundary_edges(mesh, tag)
    if len(edges) == 0:
        raise ValueError(f"mesh has no boundary edges tagged {tag!r}")
    xy = np.asarray(mesh.node_xy)
    p, q, m = edges[:, 0], edges[:, 1], edges[:, 2]
    y0, y1 = xy[p, 1], xy[q, 1]
    lens = np.abs(y1 - y0)
    t = _GL_T[None, :]
    yq = y0[:, None] + (y1 - y0)[:, None] * t          # (E, 10)
    shp = np.stack([(1.0 - t) * (1.0 - 2.0 * t),
                    t * (2.0 * t - 1.0),
                    4.0 * t * (1.0 - t)], axis=-1)      # (1, 10, 3)
    w = lens[:, None] * _GL_W[None, :]                  # (E, 10)

    sup = np.unique(np.concatenate([p, q, m]))
    pos = {d: i for i, d in enumerate(sup)}
    B = np.zeros((basis.n_modes, len(sup)))
    dof_cols = np.stack([p, q, m], axis=-1)             # (E, 3)
    for n in range(basis.n_modes):
        phi = basis.phi(n, yq)                          # (E, 10)
        contrib = np.einsum("eq,eq,eqk->ek", w, phi, np.broadcast_to(shp, yq.shape + (3,)))
        np.add.at(B[n], np.vectorize(pos.get)(dof_cols).ravel(), contrib.ravel())
    return sup, B


def attach_dtn_and_rhs(system: SparseComplexSystem, mesh: Mesh,
                       basis: ModalBasis, L: float,
                       incidence: str = "left") -> SparseComplexSystem:
    """Add the transparent-boundary blocks and the incident piston load.

    The matrix gains sum_n gamma_n (u, phi_n)(v, phi_n) on both truncation
    boundaries; the right-hand side gains -2 i kappa E (v, phi_0) on the
    boundary the incident wave enters, with E = e^{-i kappa (Z - L)} the
    incident trace value there.  The system stays complex symmetric.
    """
    if incidence not in ("left", "right"):
        raise ValueError(f"incidence must be 'left' or 'right', got {incidence!r}")
    Z = mesh.geometry.trunc_half_length
    kappa = basis.kappa
    E = np.exp(-1j * kappa * (Z - L))
    n = system.dof_map.n_dofs
    add = sp.csr_matrix((n, n), dtype=np.complex128)
    for tag in (TAG_GAMMA_MINUS, TAG_GAMMA_PLUS):
        sup, B = _mode_load_vectors(mesh, basis, tag)
        block = (B.T * basis.gammas[None, :]) @ B       # (s, s) complex
        rows = np.repeat(sup, len(sup))
        cols = np.tile(sup, len(sup))
        add = add + sp.coo_matrix((block.ravel(), (rows, cols)),
                                  shape=(n, n)).tocsr()
        in_tag = TAG_GAMMA_MINUS if incidence == "left" else TAG_GAMMA_PLUS
        if tag == in_tag:
            system.rhs[sup] += -2j * kappa * E * B[0]
    system.matrix = (system.matrix + add).tocsr()
    return system


def _piston_projection(mesh: Mesh, u: np.ndarray, tag: str) -> complex:
    """(u, phi_0) over one truncation boundary."""
    edges = _boundary_edges(mesh, tag)
    xy = np.asarray(mesh.node_xy)
    p, q, m = edges[:, 0], edges[:, 1], edges[:, 2]
    lens = np.abs(xy[q, 1] - xy[p, 1])
    # Simpson weights are exact for quadratic traces
    return complex(np.sum(lens / 6.0 * (u[p] + 4.0 * u[m] + u[q])))


def amplitude_at_center(mesh: Mesh, u: np.ndarray) -> complex:
    """Piston content int_0^1 u(0, y) dy of the trace on the mid-line z = 0."""
    xy = np.asarray(mesh.node_xy)
    on_line = xy[:, 0] == 0.0
    total = 0.0 + 0.0j
    seen = set()
    for (a, b), mid in mesh.edge_midpoints.items():
        if on_line[a] and on_line[b]:
            key = (a, b)
            if key in seen:
                continue
            seen.add(key)
            ln = abs(xy[b, 1] - xy[a, 1])
            total += ln / 6.0 * (u[a] + 4.0 * u[mid] + u[b])
    return complex(total)


def solve_scattering(geom: WaveguideGeometry2D, kappa: float, h: float = 0.04,
                     n_modes: int = 15, want_field: bool = False,
                     tip_grading: float = 0.5, tip_layers: int = 4,
                     incidence: str = "left") -> ScatteringResult:
    """Mesh, assemble, attach transparent boundaries, solve, extract R and T.

    The reported coefficients follow the screen-shifted convention: the
    incident wave is e^{i kappa (z+L)}, the reflected wave R e^{-i kappa (z+L)}
    and the transmitted wave T e^{i kappa (z-L)} (mirrored for right
    incidence), so an empty guide gives T = e^{2 i kappa L}.
    """
    L = geom.screen_half_distance
    Z = geom.trunc_half_length
    basis = modal_rates(kappa, n_modes)
    mesh = build_mesh(geom, h, tip_grading=tip_grading, tip_layers=tip_layers)
    system = assemble(mesh, kappa)
    attach_dtn_and_rhs(system, mesh, basis, L, incidence=incidence)
    u = solve_linear(system)

    E = np.exp(-1j * kappa * (Z - L))
    p_minus = _piston_projection(mesh, u, TAG_GAMMA_MINUS)
    p_plus = _piston_projection(mesh, u, TAG_GAMMA_PLUS)
    if incidence == "left":
        T = p_plus * E
        R = (p_minus - E) * E
    else:
        T = p_minus * E
        R = (p_plus - E) * E
    energy = abs(1.0 - abs(R) ** 2 - abs(T) ** 2)
    amp = amplitude_at_center(mesh, u)
    log.debug("L=%.6f: |R|=%.6f |T|=%.6f energy residual %.2e",
              L, abs(R), abs(T), energy)
    return ScatteringResult(R=complex(R), T=complex(T),
                            energy_residual=float(energy),
                            amplitude_mid=amp,
                            field=u if want_field else None,
                            mesh=mesh if want_field else None,
                            kappa=float(kappa), L=float(L))


# ----------------------------------------------------------------------------
# field sampling
# ----------------------------------------------------------------------------

_FIELD_PARTS = ("real", "imag", "scattered_real", "scattered_imag")


def export_field(result: ScatteringResult, mesh: Mesh, grid, part: str,
                 L: float) -> np.ndarray:
    """Sample the P2 field on a uniform grid over the computational rectangle.

    Returns an (nx*ny, 3) array of rows (z, y, value); points that fall on a
    closed screen segment (crack faces) carry NaN.  ``scattered_*`` parts
    subtract the incident wave e^{i kappa (z+L)} everywhere.
    """
    if result.field is None:
        raise ValueError("result carries no field; re-run solve with want_field=True")
    if part not in _FIELD_PARTS:
        raise ValueError(f"part must be one of {_FIELD_PARTS}, got {part!r}")
    nx, ny = int(grid[0]), int(grid[1])
    if nx < 2 or ny < 2:
        raise ValueError("grid must be at least 2x2")
    geom = mesh.geometry
    Z, H = geom.trunc_half_length, geom.height
    zs = np.linspace(-Z, Z, nx)
    ys = np.linspace(0.0, H, ny)
    pts = np.column_stack([np.repeat(zs, ny), np.tile(ys, nx)])

    u = result.field
    xy = np.asarray(mesh.node_xy)
    tris = np.asarray(mesh.triangles)
    vals = _interp_p2(xy, tris, np.asarray(mesh.tri_midnodes), u, pts)

    if part.startswith("scattered"):
        vals = vals - np.exp(1j * result.kappa * (pts[:, 0] + L))
    out = vals.real if part.endswith("real") else vals.imag

    # blank out crack points: screen line minus apertures
    for s in geom.screen_positions:
        on = np.abs(pts[:, 0] - s) <= 1e-9
        if not np.any(on):
            continue
        for lo, hi in geom.closed_segments(s):
            hit = on & (pts[:, 1] >= lo - 1e-9) & (pts[:, 1] <= hi + 1e-9)
            out = np.where(hit, np.nan, out)
    return np.column_stack([pts, out])


def _interp_p2(xy, tris, mids, u, pts):
    """Evaluate the P2 field at arbitrary points via barycentric location."""
    p1, p2, p3 = xy[tris[:, 0]], xy[tris[:, 1]], xy[tris[:, 2]]
    cent = (p1 + p2 + p3) / 3.0
    tree = cKDTree(cent)
    det = ((p2[:, 0] - p1[:, 0]) * (p3[:, 1] - p1[:, 1])
           - (p3[:, 0] - p1[:, 0]) * (p2[:, 1] - p1[:, 1]))
    scale = np.sqrt(np.abs(det)).mean()
    tol = 1e-10 * max(scale, 1.0)

    def bary(t, p):
        d = det[t]
        l2 = ((p[:, 0] - p1[t, 0]) * (p3[t, 1] - p1[t, 1])
              - (p3[t, 0] - p1[t, 0]) * (p[:, 1] - p1[t, 1])) / d
        l3 = ((p2[t, 0] - p1[t, 0]) * (p[:, 1] - p1[t, 1])
              - (p[:, 0] - p1[t, 0]) * (p2[t, 1] - p1[t, 1])) / d
        return np.stack([1.0 - l2 - l3, l2, l3], axis=-1)

    n_pts = len(pts)
    vals = np.zeros(n_pts, dtype=np.complex128)
    found = np.zeros(n_pts, dtype=bool)
    k = min(16, len(tris))
    _, cand = tree.query(pts, k=k)
    cand = np.atleast_2d(cand)
    for col in range(cand.shape[1]):
        rem = ~found
        if not np.any(rem):
            break
        t = cand[rem, col]
        lam = bary(t, pts[rem])
        ok = np.all(lam >= -tol, axis=1)
        if not np.any(ok):
            continue
        idx = np.nonzero(rem)[0][ok]
        tt = t[ok]
        lam_ok = np.clip(lam[ok], 0.0, 1.0)
        dofs = np.hstack([tris[tt], mids[tt]])
        vals[idx] = np.einsum("pk,pk->p", shape_values(lam_ok), u[dofs])
        found[idx] = True
    if not np.all(found):
        # brute-force the stragglers (points on sliver corners etc.)
        for i in np.nonzero(~found)[0]:
            p = pts[i:i + 1]
            lam_all = bary(np.arange(len(tris)), np.broadcast_to(p, (len(tris), 2)))
            ok = np.nonzero(np.all(lam_all >= -tol, axis=1))[0]
            if len(ok) == 0:
                raise NumericalError(f"field sample point {tuple(p[0])} not in mesh")
            t = int(ok[0])
            lam = np.clip(lam_all[t:t + 1], 0.0, 1.0)
            dofs = np.concatenate([tris[t], mids[t]])
            vals[i] = shape_values(lam)[0] @ u[dofs]
            found[i] = True
    return vals


def write_field_table(table: np.ndarray, stream) -> None:
    """Write (z, y, value) rows as plain text, blank line between z-groups."""
    prev = None
    for z, y, v in table:
        if prev is not None and z != prev:
            stream.write("\n")
        prev = z
        stream.write(f"{z:.9g} {y:.9g} {v:.9g}\n" if np.isfinite(v)
                     else f"{z:.9g} {y:.9g} nan\n")
