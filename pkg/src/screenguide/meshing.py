"""Conforming P2 triangle meshes for a strip with zero-thickness screens.

The domain is the rectangle (-Z, Z) x (0, 1) with two vertical screens at
z = -L and z = +L.  Each screen is a segment of the cross-section with open
apertures removed; the screen itself has zero thickness, so mesh nodes on the
closed parts of a screen line are duplicated into a left-face and a
right-face copy (a "seam"), while nodes inside an aperture stay single.
Aperture endpoints (crack tips) are kept as exact mesh vertices and stay
single: both faces meet there.

Mesh structure, outside-in:

* a structured tensor grid of size ~h over most of the strip, with grid
  lines snapped to z in {-Z, -L, 0, +L, +Z};
* a thin vertical "slab" around each perforated screen, tiled with square
  cells of size ~W/2 (W = slab half-width, W <= h);
* inside the slab, a square "window" around each aperture (or around each
  crack tip for apertures wider than the window), filled with concentric
  square rings that shrink geometrically from W down to the aperture scale
  and then down to the crack-tip scale delta = min(eps/2, h) * g^layers;
* mismatched node rows are joined by a monotone-merge "zipper" strip, which
  keeps all transitions 2:1-ish and all angles bounded away from zero.

Everything is deterministic and mirror-covariant: a geometry invariant under
z -> -z and/or y -> 1-y produces a node-for-node symmetric mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError

__all__ = [
    "WaveguideGeometry2D",
    "Mesh",
    "build_mesh",
    "validate_mesh",
    "dump_mesh",
]

TAG_WALL = "wall"
TAG_SCREEN = "screen_face"
TAG_GAMMA_MINUS = "gamma_minus"
TAG_GAMMA_PLUS = "gamma_plus"

_F2 = (-1.0, 0.0, 1.0)
_F4 = (-1.0, -0.5, 0.0, 0.5, 1.0)


# ----------------------------------------------------------------------------
# geometry
# ----------------------------------------------------------------------------

def _check_holes(holes, name):
    if holes is None:
        return None
    out = []
    for iv in holes:
        lo, hi = float(iv[0]), float(iv[1])
        if not (0.0 < lo < hi < 1.0):
            raise ValueError(f"{name}: hole ({lo}, {hi}) must lie strictly inside (0, 1)")
        out.append((lo, hi))
    out.sort()
    for (a, b), (c, d) in zip(out, out[1:]):
        if c <= b:
            raise ValueError(f"{name}: holes ({a}, {b}) and ({c}, {d}) overlap or touch")
    return tuple(out)


@dataclass(frozen=True)
class WaveguideGeometry2D:
    """Strip (-Z, Z) x (0, height) with screens at z = -L and z = +L.

    ``holes_left`` / ``holes_right`` are the apertures of each screen, given
    as open subintervals of (0, 1):
      * list of (lo, hi) pairs -- perforated screen,
      * empty list           -- fully closed screen,
      * None                 -- no screen at all on that line.
    """

    screen_half_distance: float
    trunc_half_length: float
    holes_left: tuple | None = ()
    holes_right: tuple | None = ()
    height: float = 1.0

    def __post_init__(self):
        L, Z = self.screen_half_distance, self.trunc_half_length
        if not (0.0 < L < Z):
            raise ValueError("need 0 < L < Z (screen inside the truncated strip)")
        if self.height <= 0.0:
            raise ValueError("height must be > 0")
        object.__setattr__(self, "holes_left", _check_holes(self.holes_left, "holes_left"))
        object.__setattr__(self, "holes_right", _check_holes(self.holes_right, "holes_right"))

    @property
    def screen_positions(self):
        return (-self.screen_half_distance, self.screen_half_distance)

    def holes_of(self, s):
        return self.holes_left if s < 0 else self.holes_right

    def closed_segments(self, s):
        """Complement of the apertures in [0, height] for the screen at z=s."""
        holes = self.holes_of(s)
        if holes is None:
            return ()
        segs, prev = [], 0.0
        for lo, hi in holes:
            segs.append((prev, lo))
            prev = hi
        segs.append((prev, self.height))
        return tuple(segs)


@dataclass(eq=False)
class Mesh:
    """P2 triangle mesh with duplicated crack-face nodes.

    node_xy holds all nodes (vertices first, then edge midpoints); triangles
    and tri_midnodes give per-triangle vertex ids and midpoint ids for the
    local edges (v0v1, v1v2, v2v0).  seam_table pairs coincident nodes across
    each crack: (left-face id, right-face id).
    """

    node_xy: np.ndarray
    n_vertices: int
    triangles: np.ndarray
    tri_midnodes: np.ndarray
    seam_table: np.ndarray
    seam_segments: int
    boundary_edges: np.ndarray      # (k, 3): vertex a, vertex b, midpoint
    boundary_tags: np.ndarray       # (k,) strings
    edge_midpoints: dict = field(repr=False)
    geometry: WaveguideGeometry2D | None = None
    target_h: float = 0.0

    @property
    def n_nodes(self):
        return len(self.node_xy)

    @property
    def vertices(self):
        return self.node_xy[: self.n_vertices]


# ----------------------------------------------------------------------------
# incremental builder: node registry + oriented triangle emission
# ----------------------------------------------------------------------------

class _Builder:
    def __init__(self):
        self._ids = {}
        self.xy = []
        self.tris = []

    def node(self, z, y):
        key = (z, y)
        idx = self._ids.get(key)
        if idx is None:
            idx = len(self.xy)
            self._ids[key] = idx
            self.xy.append(key)
        return idx

    def tri(self, a, b, c):
        (za, ya), (zb, yb), (zc, yc) = self.xy[a], self.xy[b], self.xy[c]
        area2 = (zb - za) * (yc - ya) - (yb - ya) * (zc - za)
        if area2 == 0.0:
            raise NumericalError(f"degenerate triangle at ({za:.6g}, {ya:.6g})")
        if area2 < 0.0:
            b, c = c, b
        self.tris.append((a, b, c))

    def row(self, coords):
        """Register a row of nodes; returns (ids, params) with param = position
        along the row (the coordinate that varies)."""
        ids = [self.node(z, y) for z, y in coords]
        zs = [c[0] for c in coords]
        ts = zs if (max(zs) - min(zs)) > 0 else [c[1] for c in coords]
        return ids, ts

    def _quad4(self, corners):
        """Split a quad into 4 triangles through its centroid node."""
        pts = [self.xy[k] for k in corners]
        cz = sum(p[0] for p in pts) / 4.0
        cy = sum(p[1] for p in pts) / 4.0
        cen = self.node(cz, cy)
        for k in range(4):
            self.tri(corners[k], corners[(k + 1) % 4], cen)

    def zip_rows(self, row_a, row_b):
        """Triangulate the strip between two parallel node rows.

        The strip is split recursively along the most central, straightest
        diagonal; an exactly symmetric candidate pair triggers a 3-way split.
        Both rules are invariant under parameter reversal and under swapping
        the rows, so mirrored geometries mesh mirror-symmetrically (the plain
        left-to-right merge would not).
        """
        ids_a, ts_a = row_a
        ids_b, ts_b = row_b
        span = max(ts_a[-1], ts_b[-1]) - min(ts_a[0], ts_b[0])
        eps = 1e-12 * max(span, 1e-300)

        def cell(i0, i1, j0, j1):
            p, q = i1 - i0, j1 - j0
            if p == 0 and q == 0:
                return
            if p == 0:
                for j in range(j0, j1):
                    self.tri(ids_b[j], ids_b[j + 1], ids_a[i0])
                return
            if q == 0:
                for i in range(i0, i1):
                    self.tri(ids_a[i], ids_a[i + 1], ids_b[j0])
                return
            if p == 1 and q == 1:
                self._quad4((ids_a[i0], ids_a[i1], ids_b[j1], ids_b[j0]))
                return
            mid = 0.25 * (ts_a[i0] + ts_a[i1] + ts_b[j0] + ts_b[j1])
            best, best_key = [], None
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    if (i == i0 and j == j0) or (i == i1 and j == j1):
                        continue
                    key = (abs(ts_a[i] - mid) + abs(ts_b[j] - mid),
                           abs(ts_a[i] - ts_b[j]))
                    if best_key is None:
                        best, best_key = [(i, j)], key
                        continue
                    if abs(key[0] - best_key[0]) <= eps:
                        if abs(key[1] - best_key[1]) <= eps:
                            best.append((i, j))
                        elif key[1] < best_key[1]:
                            best, best_key = [(i, j)], key
                    elif key[0] < best_key[0]:
                        best, best_key = [(i, j)], key
            (ia, ja), (ib, jb) = best[0], best[-1]
            if len(best) > 1 and ib >= ia and jb >= ja:
                cell(i0, ia, j0, ja)
                cell(ia, ib, ja, jb)
                cell(ib, i1, jb, j1)
            else:
                cell(i0, ia, j0, ja)
                cell(ia, i1, ja, j1)

        cell(0, len(ids_a) - 1, 0, len(ids_b) - 1)

    def quad(self, z0, z1, y0, y1, mirror_flag):
        """Two triangles on an axis-aligned cell; the diagonal alternates with
        the quadrant so mirrored geometries mesh mirror-symmetrically."""
        ll = self.node(z0, y0)
        lr = self.node(z1, y0)
        ur = self.node(z1, y1)
        ul = self.node(z0, y1)
        if mirror_flag:
            self.tri(ll, lr, ul)
            self.tri(lr, ur, ul)
        else:
            self.tri(ll, lr, ur)
            self.tri(ll, ur, ul)


def _fill(a, b, cap):
    """Uniform partition points of [a, b] (inclusive) with spacing <= cap.

    The endpoints are returned bit-exactly (`a + (b-a)` may differ from `b`
    in the last ulp, which would silently split mesh nodes).
    """
    n = max(1, int(math.ceil((b - a) / cap - 1e-9)))
    return [a] + [a + (b - a) * k / n for k in range(1, n)] + [b]


def _filled_axis(anchors, cap):
    vals = [anchors[0]]
    for a, b in zip(anchors, anchors[1:]):
        vals.extend(_fill(a, b, cap)[1:])
    return vals


# ----------------------------------------------------------------------------
# square-ring machinery for aperture windows
# ----------------------------------------------------------------------------

def _ring_rows(bld, cz, cy, a, fracs=None, zs=None, ys=None):
    """Node rows of a square ring of half-size a centred at (cz, cy).

    Explicit coordinate lists zs/ys override the fraction construction so a
    ring can reuse node positions owned by a neighboring structure bit-exactly.
    """
    if zs is None:
        zs = [cz + a * f for f in fracs]
    if ys is None:
        ys = [cy + a * f for f in fracs]
    bottom = bld.row([(z, ys[0]) for z in zs])
    top = bld.row([(z, ys[-1]) for z in zs])
    left = bld.row([(zs[0], y) for y in ys])
    right = bld.row([(zs[-1], y) for y in ys])
    return {"bottom": bottom, "top": top, "left": left, "right": right}


def _zip_rings(bld, inner, outer):
    for side in ("bottom", "top", "left", "right"):
        bld.zip_rows(inner[side], outer[side])


def _fan(bld, cz, cy, ring):
    """Triangulate the inside of a ring by fanning from its centre node."""
    center = bld.node(cz, cy)
    b_ids = ring["bottom"][0]
    t_ids = ring["top"][0]
    l_ids = ring["left"][0]
    r_ids = ring["right"][0]
    loop = list(b_ids) + list(r_ids[1:]) + list(reversed(t_ids))[1:] \
        + list(reversed(l_ids))[1:-1]
    for p, q in zip(loop, loop[1:] + loop[:1]):
        bld.tri(center, p, q)


def _grade_radii(a0, delta_req, grading):
    """Geometric ring radii from a0 down to ~delta_req.

    The per-level ratio is clamped into [0.5, 0.71] (anything steeper would
    produce sliver rings); a steeper requested grading is realized with more
    levels so the final radius is at least as small as requested.
    """
    if delta_req >= a0 * 0.999:
        return [a0]
    g = min(max(grading, 0.5), 0.71)
    n = max(1, int(math.ceil(math.log(delta_req / a0) / math.log(g) - 1e-9)))
    return [a0 * g ** k for k in range(n + 1)]


def _tip_delta(w, h_eff, grading, layers):
    return min(0.5 * w, h_eff) * grading ** layers


def _emit_tip_web(bld, s, t, a0, rows0, delta_req, grading):
    """Concentric 8-node square rings around a crack tip, ending in a fan."""
    radii = _grade_radii(a0, delta_req, grading)
    rings = [rows0]
    for a in radii[1:]:
        rings.append(_ring_rows(bld, s, t, a, _F2))
    for outer, inner in zip(rings, rings[1:]):
        _zip_rings(bld, inner, outer)
    _fan(bld, s, t, rings[-1])


def _ladder_radii(r_in, r_out):
    """Ascending radii from r_in to r_out with ratios in [1.4, 2]."""
    radii = [r_in]
    while radii[-1] * 2.0 < r_out * (1.0 - 1e-12):
        radii.append(radii[-1] * 2.0)
    if r_out / radii[-1] < 1.4 and len(radii) >= 2:
        radii[-1] = math.sqrt(radii[-2] * r_out)
    radii.append(r_out)
    return radii


def _emit_hole_window(bld, s, lo, hi, W, zs5, h_eff, grading, layers):
    """Square window of half-size W around a whole (narrow) aperture.

    Outer F4 rings shrink from W to the aperture scale w = hi - lo; inside
    sits a fixed block: two quad columns, plus one 8-node box around each
    tip whose interior is a geometrically graded tip web.
    """
    c = 0.5 * (lo + hi)
    w = hi - lo
    ys5 = [c - W, c - 0.5 * W, c, c + 0.5 * W, c + W]
    etas = [c - w, lo, c, hi, c + w]
    zsw = [s - w, s - 0.5 * w, s, s + 0.5 * w, s + w]

    # ring ladder from the window boundary down to the block boundary
    radii = _ladder_radii(w, W)
    rings = [_ring_rows(bld, s, c, w, zs=zsw, ys=etas)]
    for a in radii[1:-1]:
        rings.append(_ring_rows(bld, s, c, a, _F4))
    rings.append(_ring_rows(bld, s, c, W, zs=zs5, ys=ys5))
    for inner, outer in zip(rings, rings[1:]):
        _zip_rings(bld, inner, outer)

    # block side columns: 2 x 4 square cells each
    for z0, z1 in ((zsw[0], zsw[1]), (zsw[3], zsw[4])):
        for y0, y1 in zip(etas, etas[1:]):
            flag = ((0.5 * (z0 + z1)) < 0.0) ^ ((0.5 * (y0 + y1)) < 0.5)
            bld.quad(z0, z1, y0, y1, flag)

    # tip boxes (8-node rings built from the shared arrays) + graded webs
    for tip, ysub in ((lo, etas[0:3]), (hi, etas[2:5])):
        rows = _ring_rows(bld, s, tip, 0.5 * w, zs=zsw[1:4], ys=ysub)
        _emit_tip_web(bld, s, tip, 0.5 * w, rows,
                      _tip_delta(w, h_eff, grading, layers), grading)


def _emit_tip_window(bld, s, t, w, W, zs5, h_eff, grading, layers):
    """Square window of half-size W around a single tip of a wide aperture."""
    ys5 = [t - W, t - 0.5 * W, t, t + 0.5 * W, t + W]
    outer = _ring_rows(bld, s, t, W, zs=zs5, ys=ys5)
    first = _ring_rows(bld, s, t, 0.5 * W, _F2)
    _zip_rings(bld, first, outer)
    _emit_tip_web(bld, s, t, 0.5 * W, first,
                  _tip_delta(w, h_eff, grading, layers), grading)


# ----------------------------------------------------------------------------
# per-screen slab: windows + plain square-cell rectangles
# ----------------------------------------------------------------------------

def _slab_window_size(geom, s, h_eff):
    """Window half-size W for the screen at z=s, and the per-hole mode.

    Narrow holes (w <= W/1.4) get one window around the whole aperture; wide
    holes (w >= 2W) get one window per tip.  W shrinks until no hole is left
    between those regimes, so ring ladders never need ratios below 1.4.
    """
    holes = geom.holes_of(s)
    H = geom.height
    edges = [0.0] + [e for iv in holes for e in iv] + [H]
    gaps = []
    for k, (lo, hi) in enumerate(holes):
        gaps.append(min(lo - edges[2 * k], edges[2 * k + 3] - hi))
    W = min([h_eff] + [0.7 * g for g in gaps])
    for _ in range(2 * len(holes) + 2):
        shrunk = False
        for lo, hi in holes:
            w = hi - lo
            if W / 1.4 < w < 2.0 * W:
                W = 0.5 * w
                shrunk = True
        if not shrunk:
            break
    modes = ["narrow" if (hi - lo) <= W / 1.4 else "wide" for lo, hi in holes]
    return W, modes


def _emit_slab(bld, geom, s, W, modes, h_eff, grading, layers):
    """Mesh the strip [s-W, s+W] x [0, H]; returns the boundary y-row values."""
    H = geom.height
    zs5 = [s - W, s - 0.5 * W, s, s + 0.5 * W, s + W]
    features = []          # (window boundary ys5, emit)
    for (lo, hi), mode in zip(geom.holes_of(s), modes):
        if mode == "narrow":
            c = 0.5 * (lo + hi)
            ys5 = [c - W, c - 0.5 * W, c, c + 0.5 * W, c + W]
            features.append((ys5, lambda lo=lo, hi=hi: _emit_hole_window(
                bld, s, lo, hi, W, zs5, h_eff, grading, layers)))
        else:
            w = hi - lo
            for t in (lo, hi):
                ys5 = [t - W, t - 0.5 * W, t, t + 0.5 * W, t + W]
                features.append((ys5, lambda t=t, w=w: _emit_tip_window(
                    bld, s, t, w, W, zs5, h_eff, grading, layers)))

    boundary_y = []
    cursor = 0.0
    for ys5, emit in features + [([H], None)]:
        y_lo = ys5[0]
        if y_lo > cursor:      # plain rectangle of square cells, crack at z=s
            ys = _fill(cursor, y_lo, 0.5 * W)
            boundary_y.extend(ys if not boundary_y else ys[1:])
            for z0, z1 in zip(zs5, zs5[1:]):
                for y0, y1 in zip(ys, ys[1:]):
                    flag = ((0.5 * (z0 + z1)) < 0.0) ^ ((0.5 * (y0 + y1)) < 0.5 * H)
                    bld.quad(z0, z1, y0, y1, flag)
        if emit is None:
            break
        emit()
        boundary_y.extend(ys5 if not boundary_y else ys5[1:])
        cursor = ys5[-1]
    return boundary_y


def _pyramid_rows(W, h_eff, H, y_global):
    """Row spacings/arrays bridging slab-scale W/2 up to the global spacing."""
    rows = []
    offset = W
    spacing = W
    while spacing < h_eff * (1.0 - 1e-12):
        offset += spacing
        rows.append((offset, _filled_axis((0.0, 0.5 * H, H), spacing)))
        spacing = min(2.0 * spacing, h_eff)
    offset += spacing
    rows.append((offset, y_global))
    return rows


# ----------------------------------------------------------------------------
# main construction
# ----------------------------------------------------------------------------

def build_mesh(geom, h, tip_grading=0.5, tip_layers=4):
    """Build the conforming P2 mesh of the slitted strip.

    tip_grading in (0, 1] and tip_layers >= 0 control the geometric
    refinement toward aperture endpoints: the local size at a tip is
    min(aperture_width/2, h) * tip_grading**tip_layers.
    """
    if h <= 0.0:
        raise ValueError("h must be > 0")
    if not (0.0 < tip_grading <= 1.0):
        raise ValueError("tip_grading must be in (0, 1]")
    if tip_layers < 0 or int(tip_layers) != tip_layers:
        raise ValueError("tip_layers must be a nonnegative integer")

    L, Z, H = geom.screen_half_distance, geom.trunc_half_length, geom.height
    screens = [s for s in geom.screen_positions if geom.holes_of(s) is not None]
    h_eff = h
    if screens:
        h_eff = min(h, L / 6.0, (Z - L) / 6.0)
    y_global = _filled_axis((0.0, 0.5 * H, H), h_eff)

    bld = _Builder()
    rows = [(-Z, y_global), (0.0, y_global), (Z, y_global)]
    slab_spans = {}

    for s in screens:
        holes = geom.holes_of(s)
        if holes == ():
            rows.append((s, y_global))
            continue
        W, modes = _slab_window_size(geom, s, h_eff)
        boundary_y = _emit_slab(bld, geom, s, W, modes, h_eff, tip_grading, tip_layers)
        rows.append((s - W, boundary_y))
        rows.append((s + W, boundary_y))
        slab_spans[(s - W, s + W)] = True
        for off, arr in _pyramid_rows(W, h_eff, H, y_global):
            rows.append((s - off, arr))
            rows.append((s + off, arr))

    rows.sort(key=lambda r: r[0])
    # fill long gaps between global-array rows with more global-array rows
    full = []
    for (z0, a0), (z1, a1) in zip(rows, rows[1:]):
        full.append((z0, a0))
        if (z0, z1) not in slab_spans and z1 - z0 > h_eff * (1.0 + 1e-9):
            for z in _fill(z0, z1, h_eff)[1:-1]:
                full.append((z, y_global))
    full.append(rows[-1])

    for (z0, a0), (z1, a1) in zip(full, full[1:]):
        if (z0, z1) in slab_spans:
            continue                      # slab interior already meshed
        if a0 is a1:
            for y0, y1 in zip(a0, a0[1:]):
                flag = ((0.5 * (z0 + z1)) < 0.0) ^ ((0.5 * (y0 + y1)) < 0.5 * H)
                bld.quad(z0, z1, y0, y1, flag)
        else:
            bld.zip_rows(bld.row([(z0, y) for y in a0]),
                         bld.row([(z1, y) for y in a1]))

    xy = np.array(bld.xy)
    tris = np.array(bld.tris, dtype=np.int64)

    # --- seam duplication: split crack-line nodes into face copies ---------
    seam_segments = 0
    tip_set = set()
    for s in screens:
        for lo, hi in geom.holes_of(s) or ():
            tip_set.add((s, lo))
            tip_set.add((s, hi))

    centroids_z = xy[tris, 0].mean(axis=1)
    new_xy = list(map(tuple, xy))
    for s in screens:
        segs = geom.closed_segments(s)
        seam_segments += len(segs)
        on_line = np.nonzero(xy[:, 0] == s)[0]
        dup = {}
        for v in on_line:
            y = xy[v, 1]
            if (s, y) in tip_set:
                continue
            if any(a <= y <= b for a, b in segs):
                new_id = len(new_xy)
                new_xy.append((s, y))
                dup[v] = new_id
        if not dup:
            continue
        for t in range(len(tris)):
            if centroids_z[t] > s:
                for k in range(3):
                    rep = dup.get(tris[t, k])
                    if rep is not None:
                        tris[t, k] = rep
    xy = np.array(new_xy)
    n_vertices = len(xy)

    # --- P2 edge midpoints (seam faces get distinct midpoints for free) ----
    edge_mid = {}
    mid_xy = []
    tri_mids = np.empty_like(tris)
    for t in range(len(tris)):
        a, b, c = tris[t]
        for k, (p, q) in enumerate(((a, b), (b, c), (c, a))):
            key = (p, q) if p < q else (q, p)
            m = edge_mid.get(key)
            if m is None:
                m = n_vertices + len(mid_xy)
                edge_mid[key] = m
                mid_xy.append(((xy[p, 0] + xy[q, 0]) / 2.0,
                               (xy[p, 1] + xy[q, 1]) / 2.0))
            tri_mids[t, k] = m
    node_xy = np.vstack([xy, np.array(mid_xy).reshape(-1, 2)])

    # --- boundary edges and tags -------------------------------------------
    edge_count = {}
    for t in range(len(tris)):
        a, b, c = tris[t]
        for p, q in ((a, b), (b, c), (c, a)):
            key = (p, q) if p < q else (q, p)
            edge_count[key] = edge_count.get(key, 0) + 1
    b_edges, b_tags = [], []
    for (p, q), cnt in edge_count.items():
        if cnt != 1:
            continue
        (zp, yp), (zq, yq) = node_xy[p], node_xy[q]
        if zp == -Z and zq == -Z:
            tag = TAG_GAMMA_MINUS
        elif zp == Z and zq == Z:
            tag = TAG_GAMMA_PLUS
        elif (yp == 0.0 and yq == 0.0) or (yp == H and yq == H):
            tag = TAG_WALL
        elif zp == zq and any(zp == s for s in screens):
            tag = TAG_SCREEN
        else:
            raise NumericalError(
                f"untaggable boundary edge ({zp:.6g},{yp:.6g})-({zq:.6g},{yq:.6g})")
        b_edges.append((p, q, edge_mid[(p, q) if p < q else (q, p)]))
        b_tags.append(tag)

    # --- seam table: pair coincident nodes (vertices and midpoints) --------
    side = np.zeros(len(node_xy), dtype=np.int8)
    for t in range(len(tris)):
        cz = node_xy[tris[t], 0].mean()
        for k in range(3):
            for n in (tris[t, k], tri_mids[t, k]):
                for s in screens:
                    if node_xy[n, 0] == s:
                        side[n] = -1 if cz < s else 1
    pairs = []
    groups = {}
    for n in range(len(node_xy)):
        z, y = node_xy[n]
        if any(z == s for s in screens):
            groups.setdefault((z, y), []).append(n)
    for (z, y), ids in sorted(groups.items()):
        if len(ids) == 2:
            a, b = ids
            if side[a] > side[b]:
                a, b = b, a
            pairs.append((a, b))
        elif len(ids) > 2:
            raise NumericalError(f"more than two nodes coincide at ({z}, {y})")
    seam_table = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)

    return Mesh(
        node_xy=node_xy,
        n_vertices=n_vertices,
        triangles=tris,
        tri_midnodes=tri_mids,
        seam_table=seam_table,
        seam_segments=seam_segments,
        boundary_edges=np.array(b_edges, dtype=np.int64).reshape(-1, 3),
        boundary_tags=np.array(b_tags),
        edge_midpoints=edge_mid,
        geometry=geom,
        target_h=h,
    )


# ----------------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------------

def _triangle_angles(xy, tris):
    p = xy[tris]
    angles = np.empty((len(tris), 3))
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cosang = np.sum(u * v, axis=1) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angles[:, k] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return angles


def validate_mesh(mesh):
    """Diagnostic report: orientation, conformity, min angle, seams, boundary.

    Conformity means every edge is shared by at most two triangles and the
    only coincident node pairs are the declared seam pairs; boundary_closed
    means the boundary edges form closed loops (every boundary vertex has
    exactly two boundary edges).
    """
    xy = mesh.node_xy
    tris = mesh.triangles
    p = xy[tris]
    area2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    orientation_ok = bool(np.all(area2 > 0.0))

    edge_count = {}
    for a, b, c in tris:
        for pq in ((a, b), (b, c), (c, a)):
            key = (pq[0], pq[1]) if pq[0] < pq[1] else (pq[1], pq[0])
            edge_count[key] = edge_count.get(key, 0) + 1
    conformity_ok = all(v <= 2 for v in edge_count.values())

    seam_groups = {frozenset(pair) for pair in map(tuple, mesh.seam_table)}
    coincident = {}
    for n in range(mesh.n_vertices):
        coincident.setdefault(tuple(xy[n]), []).append(n)
    for ids in coincident.values():
        if len(ids) == 1:
            continue
        if len(ids) != 2 or frozenset(ids) not in seam_groups:
            conformity_ok = False

    degree = {}
    for (a, b), cnt in edge_count.items():
        if cnt == 1:
            degree[a] = degree.get(a, 0) + 1
            degree[b] = degree.get(b, 0) + 1
    boundary_closed = bool(degree) and all(d == 2 for d in degree.values())

    return {
        "orientation_ok": orientation_ok,
        "conformity_ok": conformity_ok,
        "min_angle": float(_triangle_angles(xy, tris).min()) if len(tris) else 0.0,
        "seam_count": int(mesh.seam_segments),
        "boundary_closed": boundary_closed,
    }


def dump_mesh(mesh, stream):
    """Plain-text dump: `v x y`, `t i j k`, `s left right`, `b i j tag`."""
    for z, y in mesh.node_xy:
        stream.write(f"v {z:.17g} {y:.17g}\n")
    for a, b, c in mesh.triangles:
        stream.write(f"t {a} {b} {c}\n")
    for a, b in mesh.seam_table:
        stream.write(f"s {a} {b}\n")
    for (a, b, m), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        stream.write(f"b {a} {b} {tag}\n")
