"""Harmonic capacity of a flat crack by a first-kind boundary element method.

A flat screen hole theta x {0} in R^3 carries a capacity potential P: the
harmonic function equal to 1 on the crack, decaying at infinity.  Writing P as
a single-layer potential with density sigma,

    P(x) = (1/4pi) * integral_theta sigma(y') / |x - y'| dy',

the Dirichlet condition P = 1 on theta is a first-kind integral equation for
sigma.  The capacity and the dipole vector are moments of the density:

    Capa(theta) = (1/4pi) * integral sigma,      q = integral y sigma(y) dy,

and the far field expands as P(xi) = Capa/|xi| + q . grad Phi(xi) + O(|xi|^-3)
with Phi(xi) = -1/(4pi |xi|).

Discretization: piecewise-constant densities with collocation at panel
centroids.  Panels are edge-graded (geometric ratio 0.5 over 3 layers) because
sigma blows up like the inverse square root of the distance to the crack edge.
The collocation matrix is dense, small (<= ~8k panels) and symmetrized, so a
direct symmetric solve is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError

__all__ = [
    "CrackShape",
    "CrackPanels",
    "CapacityResult",
    "panelize",
    "refine",
    "solve_capacity",
    "eval_far_field",
]

# geometric edge grading toward the crack boundary: ratio 0.5 over 3 layers
EDGE_GRADING_RATIO = 0.5
EDGE_GRADING_LAYERS = 3
# panel pairs closer than this multiple of their joint radius get a
# subdivided (16-point) source quadrature instead of the centroid rule
NEAR_FIELD_FACTOR = 2.5
_GL16 = np.polynomial.legendre.leggauss(16)


# ----------------------------------------------------------------------------
# shapes and panelizations
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CrackShape:
    """A flat crack outline: ``disk``, ``rectangle`` or simple ``polygon``."""

    tag: str
    params: tuple

    @staticmethod
    def disk(radius, center=(0.0, 0.0)):
        radius = float(radius)
        if not math.isfinite(radius) or radius <= 0.0:
            raise ValueError("disk radius must be finite and > 0")
        return CrackShape("disk", (radius, float(center[0]), float(center[1])))

    @staticmethod
    def rectangle(width, height, center=(0.0, 0.0)):
        width, height = float(width), float(height)
        if min(width, height) <= 0.0 or not (math.isfinite(width) and math.isfinite(height)):
            raise ValueError("rectangle sides must be finite and > 0")
        return CrackShape("rectangle", (width, height, float(center[0]), float(center[1])))

    @staticmethod
    def polygon(vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices of shape (n, 2)")
        if _polygon_area(verts) <= 0.0:
            verts = verts[::-1].copy()
        area = _polygon_area(verts)
        if area <= 1e-14 * float(np.max(np.abs(verts)) ** 2 + 1.0):
            raise ValueError("polygon is degenerate (zero enclosed area)")
        if _polygon_self_intersects(verts):
            raise ValueError("polygon boundary must be simple (non-self-intersecting)")
        return CrackShape("polygon", (tuple(map(tuple, verts)),))

    @property
    def diameter(self):
        if self.tag == "disk":
            return 2.0 * self.params[0]
        if self.tag == "rectangle":
            return math.hypot(self.params[0], self.params[1])
        verts = np.asarray(self.params[0])
        from scipy.spatial.distance import pdist
        return float(pdist(verts).max())


@dataclass(frozen=True)
class CrackPanels:
    """Panelization of a crack: ``corners`` is (N, 3, 2) for triangle panels
    or (N, 4, 2) for rectangle panels; centroids/areas are per panel."""

    shape: CrackShape
    kind: str                 # "tri" | "rect"
    corners: np.ndarray
    level: int = 0

    @property
    def n_panels(self):
        return len(self.corners)

    @property
    def centroids(self):
        return self.corners.mean(axis=1)

    @property
    def areas(self):
        c = self.corners
        if self.kind == "tri":
            d1 = c[:, 1] - c[:, 0]
            d2 = c[:, 2] - c[:, 0]
            return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        w = np.linalg.norm(c[:, 1] - c[:, 0], axis=1)
        h = np.linalg.norm(c[:, 3] - c[:, 0], axis=1)
        return w * h


@dataclass(frozen=True)
class CapacityResult:
    """Solved crack: capacity, in-plane dipole vector and panel densities."""

    capacity: float
    dipole: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        if not (self.capacity > 0.0):
            raise ValueError("capacity must be > 0")


def _polygon_area(verts):
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _polygon_self_intersects(verts):
    n = len(verts)
    segs = [(verts[i], verts[(i + 1) % n]) for i in range(n)]

    def crosses(a, b, c, d):
        def orient(p, q, r):
            return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return (orient(a, b, c) * orient(a, b, d) < 0 and
                orient(c, d, a) * orient(c, d, b) < 0)

    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue  # adjacent around the loop
            if crosses(*segs[i], *segs[j]):
                return True
    return False


def _graded_breaks(length, n_int):
    """1D breakpoints on [0, length] with geometric grading at both ends."""
    if n_int < 2 * (EDGE_GRADING_LAYERS + 1):
        return np.linspace(0.0, length, n_int + 1)
    # sizes: delta, 2*delta, 4*delta | uniform 8*delta ... | 4d, 2d, d
    ratios = [EDGE_GRADING_RATIO ** (EDGE_GRADING_LAYERS - k)
              for k in range(EDGE_GRADING_LAYERS)]          # [1/8? ...] ascending
    edge = np.array(ratios) / ratios[0]                      # [1, 2, 4]
    bulk = edge[-1] / EDGE_GRADING_RATIO                     # 8
    n_bulk = n_int - 2 * EDGE_GRADING_LAYERS
    total = 2 * edge.sum() + n_bulk * bulk
    delta = length / total
    sizes = np.concatenate([edge, np.full(n_bulk, bulk), edge[::-1]]) * delta
    return np.concatenate([[0.0], np.cumsum(sizes)])


def _graded_radial_fractions(n_rings):
    """Radial ring fractions in [0, 1], graded toward the rim (fraction 1)."""
    if n_rings < EDGE_GRADING_LAYERS + 2:
        return np.linspace(0.0, 1.0, n_rings + 1)
    edge = np.array([EDGE_GRADING_RATIO ** (EDGE_GRADING_LAYERS - k)
                     for k in range(EDGE_GRADING_LAYERS)])
    edge = edge / edge[0]                                    # [1, 2, 4] inward
    bulk = edge[-1] / EDGE_GRADING_RATIO
    n_bulk = n_rings - EDGE_GRADING_LAYERS
    sizes = np.concatenate([np.full(n_bulk, bulk), edge[::-1]])  # centre -> rim
    sizes = sizes / sizes.sum()
    return np.concatenate([[0.0], np.cumsum(sizes)])


def _onion_triangles(center, boundary, n_rings):
    """Triangulate a star-shaped region by concentric scaled boundary rings."""
    frac = _graded_radial_fractions(n_rings)
    m = len(boundary)
    rings = [center + t * (boundary - center) for t in frac[1:]]
    tris = []
    first = rings[0]
    for i in range(m):
        tris.append((center, first[i], first[(i + 1) % m]))
    for k in range(len(rings) - 1):
        inner, outer = rings[k], rings[k + 1]
        for i in range(m):
            j = (i + 1) % m
            tris.append((inner[i], outer[i], outer[j]))
            tris.append((inner[i], outer[j], inner[j]))
    return np.array(tris)


def panelize(shape, n):
    """Cover a crack shape with ~n edge-graded panels.

    Parameters
    ----------
    shape : CrackShape
    n : int
        Target panel count, >= 4.  Disk and polygon coverings are built from
        concentric boundary rings (triangles); rectangles from a graded
        tensor grid.
    """
    n = int(n)
    if n < 4:
        raise ValueError("panel target n must be >= 4")
    if shape.tag == "rectangle":
        width, height, cx, cy = shape.params
        nx = max(2, int(round(math.sqrt(n * width / height))))
        ny = max(2, int(math.ceil(n / nx)))
        xb = _graded_breaks(width, nx) - 0.5 * width + cx
        yb = _graded_breaks(height, ny) - 0.5 * height + cy
        corners = []
        for i in range(nx):
            for j in range(ny):
                x0, x1 = xb[i], xb[i + 1]
                y0, y1 = yb[j], yb[j + 1]
                corners.append(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))
        return CrackPanels(shape, "rect", np.array(corners))

    if shape.tag == "disk":
        radius, cx, cy = shape.params
        m = int(np.clip(2 ** round(math.log2(max(8.0, math.sqrt(2.5 * n)))), 8, 512))
        n_rings = max(2, int(math.ceil((n / m + 1) / 2)))
        angles = 2.0 * np.pi * np.arange(m) / m
        boundary = np.column_stack([cx + radius * np.cos(angles),
                                    cy + radius * np.sin(angles)])
        tris = _onion_triangles(np.array([cx, cy]), boundary, n_rings)
        return CrackPanels(shape, "tri", tris)

    # polygon: resample the boundary, then the same onion construction
    verts = np.asarray(shape.params[0], dtype=float)
    center = verts.mean(axis=0)
    rel = verts - center
    cross = rel[:, 0] * np.roll(rel[:, 1], -1) - rel[:, 1] * np.roll(rel[:, 0], -1)
    if np.any(cross <= 0):
        raise ValueError("polygon must be star-shaped about its vertex centroid")
    edge_len = np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)
    m_target = max(len(verts), int(round(math.sqrt(2.5 * n))))
    per_edge = np.maximum(1, np.round(m_target * edge_len / edge_len.sum()).astype(int))
    boundary = []
    for i, k in enumerate(per_edge):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        for t in np.arange(k) / k:
            boundary.append(a + t * (b - a))
    boundary = np.array(boundary)
    n_rings = max(2, int(math.ceil((n / len(boundary) + 1) / 2)))
    tris = _onion_triangles(center, boundary, n_rings)
    return CrackPanels(shape, "tri", tris)


def refine(panels):
    """Split every panel in four congruent children (children tile the parent)."""
    c = panels.corners
    if panels.kind == "tri":
        m01 = 0.5 * (c[:, 0] + c[:, 1])
        m12 = 0.5 * (c[:, 1] + c[:, 2])
        m20 = 0.5 * (c[:, 2] + c[:, 0])
        children = np.concatenate([
            np.stack([c[:, 0], m01, m20], axis=1),
            np.stack([m01, c[:, 1], m12], axis=1),
            np.stack([m20, m12, c[:, 2]], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ])
    else:
        p0, p1, p2, p3 = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
        e01, e12, e23, e30 = (0.5 * (p0 + p1), 0.5 * (p1 + p2),
                              0.5 * (p2 + p3), 0.5 * (p3 + p0))
        mid = 0.25 * (p0 + p1 + p2 + p3)
        children = np.concatenate([
            np.stack([p0, e01, mid, e30], axis=1),
            np.stack([e01, p1, e12, mid], axis=1),
            np.stack([mid, e12, p2, e23], axis=1),
            np.stack([e30, mid, e23, p3], axis=1),
        ])
    return CrackPanels(panels.shape, panels.kind, children, panels.level + 1)


# ----------------------------------------------------------------------------
# integral operator assembly
# ----------------------------------------------------------------------------

def _self_integral_rect(corners):
    """exact integral of 1/|c - y| over a rectangle, collocated at its centre"""
    a = 0.5 * np.linalg.norm(corners[1] - corners[0])
    b = 0.5 * np.linalg.norm(corners[3] - corners[0])
    return 4.0 * (a * math.asinh(b / a) + b * math.asinh(a / b))


def _self_integral_tri(corners, centroid):
    """integral of 1/|c - y| over a triangle, collocated at its centroid

    Split at the centroid into three vertex-singular triangles; the Duffy
    substitution makes each a smooth 1D integral, done with 16-point Gauss.
    """
    t, w = _GL16
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    total = 0.0
    for k in range(3):
        a = corners[k] - centroid
        b = corners[(k + 1) % 3] - centroid
        two_area = abs(a[0] * b[1] - a[1] * b[0])
        seg = a[None, :] + t[:, None] * (b - a)[None, :]
        total += two_area * float(np.sum(w / np.hypot(seg[:, 0], seg[:, 1])))
    return total


def _subdivide_for_quadrature(panels):
    """16 sub-centroids and sub-areas per panel for near-field quadrature."""
    fine = refine(refine(panels))
    n = panels.n_panels
    sub_c = fine.centroids.reshape(4, 4, n, 2).transpose(2, 0, 1, 3).reshape(n, 16, 2)
    sub_a = fine.areas.reshape(4, 4, n).transpose(2, 0, 1).reshape(n, 16)
    return sub_c, sub_a


def assemble_system(panels):
    """Dense symmetric collocation system (matrix B, right-hand side).

    Row i of the raw collocation equations is scaled by area_i, which makes
    the centroid-rule matrix exactly symmetric:
    B_ij = area_i * area_j / (4 pi r_ij), with analytic/adapted self-terms and
    subdivided quadrature for close panel pairs.
    """
    cent = panels.centroids
    area = panels.areas
    n = panels.n_panels
    diff = cent[:, None, :] - cent[None, :, :]
    r = np.sqrt(np.sum(diff * diff, axis=2))
    off = r + np.eye(n)
    if off.min() <= 0.0:
        raise NumericalError("duplicate panel centroids: collocation system is singular")

    B = (area[:, None] * area[None, :]) / (4.0 * np.pi * off)

    # panel "radius" = max centroid-to-corner distance
    rad = np.linalg.norm(panels.corners - cent[:, None, :], axis=2).max(axis=1)
    near = r < NEAR_FIELD_FACTOR * (rad[:, None] + rad[None, :])
    np.fill_diagonal(near, False)
    ii, jj = np.nonzero(near)
    if len(ii):
        sub_c, sub_a = _subdivide_for_quadrature(panels)
        d = cent[ii, None, :] - sub_c[jj]
        rr = np.sqrt(np.sum(d * d, axis=2))
        vals = area[ii] * np.sum(sub_a[jj] / rr, axis=1) / (4.0 * np.pi)
        B[ii, jj] = vals
    B = 0.5 * (B + B.T)

    corners = panels.corners
    if panels.kind == "rect":
        diag = np.array([_self_integral_rect(corners[i]) for i in range(n)])
    else:
        diag = np.array([_self_integral_tri(corners[i], cent[i]) for i in range(n)])
    B[np.diag_indices(n)] = area * diag / (4.0 * np.pi)
    return B, area.copy()


def solve_capacity(panels):
    """Solve the single-layer equation and return capacity, dipole, density."""
    B, rhs = assemble_system(panels)
    try:
        sigma = scipy.linalg.solve(B, rhs, assume_a="pos")
    except np.linalg.LinAlgError:
        try:
            sigma = scipy.linalg.solve(B, rhs, assume_a="sym")
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"dense capacity solve failed: {exc}") from exc
    area = panels.areas
    weights = sigma * area
    capacity = float(np.sum(weights)) / (4.0 * np.pi)
    dipole = weights @ panels.centroids
    return CapacityResult(capacity=capacity, dipole=dipole, density=sigma)


def eval_far_field(result, panels, point):
    """Single-layer potential at a 3D point well separated from the crack.

    The crack lies in the plane x3 = 0; ``point`` is (x1, x2, x3) with
    |point| > 3 * shape diameter (closer evaluations would need the adapted
    near-field quadrature that this helper intentionally omits).
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (3,):
        raise ValueError("point must be a 3-vector")
    diam = panels.shape.diameter
    if np.linalg.norm(point) <= 3.0 * diam:
        raise ValueError("point too close to the crack (need |point| > 3*diameter)")
    cent = panels.centroids
    dx = point[0] - cent[:, 0]
    dy = point[1] - cent[:, 1]
    dist = np.sqrt(dx * dx + dy * dy + point[2] * point[2])
    return float(np.sum(result.density * panels.areas / dist) / (4.0 * np.pi))
