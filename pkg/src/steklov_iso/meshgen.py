"""Reference triangulations of polygonal tiles.

A coarse triangulation is generated on a fundamental domain of the tile's
symmetry group, unfolded by the symmetries, and refined by midpoint
subdivision.  The result is invariant under every declared symmetry, which is
what makes the glued meshes exactly equivariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, cKDTree
from shapely.geometry import Point, Polygon


class MeshError(RuntimeError):
    pass


def polygon_area(pts) -> float:
    p = np.asarray(pts, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def triangle_areas(coords) -> np.ndarray:
    """Signed areas of triangles given as (T, 3, 2) coordinates."""
    c = np.asarray(coords, dtype=float)
    d1 = c[:, 1] - c[:, 0]
    d2 = c[:, 2] - c[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def triangulate_polygon(poly, h: float):
    """Triangulate a simple polygon with boundary spacing <= h.

    Boundary edges are split evenly, interior points come from a triangular
    lattice kept away from the boundary, and the Delaunay triangles inside the
    polygon are kept.  Raises MeshError if the result does not tile the
    polygon exactly or misses a boundary segment.
    """
    poly = np.asarray(poly, dtype=float)
    if polygon_area(poly) < 0:
        poly = poly[::-1]
    shape = Polygon(poly)
    if not shape.is_valid:
        raise MeshError("polygon is not simple")

    bpts = []
    for a, b in zip(poly, np.roll(poly, -1, axis=0)):
        n = max(1, math.ceil(np.linalg.norm(b - a) / h - 1e-9))
        for k in range(n):
            bpts.append(a + (b - a) * k / n)
    bpts = np.array(bpts)

    xmin, ymin, xmax, ymax = shape.bounds
    dy = h * math.sqrt(3) / 2
    ipts = []
    boundary = shape.exterior
    for j in range(int((ymax - ymin) / dy) + 2):
        y = ymin + j * dy
        off = 0.5 * h * (j % 2)
        for i in range(int((xmax - xmin) / h) + 2):
            p = Point(xmin + off + i * h, y)
            if shape.contains(p) and boundary.distance(p) > 0.55 * h:
                ipts.append((p.x, p.y))
    pts = np.vstack([bpts, np.array(ipts).reshape(-1, 2)])

    tri = Delaunay(pts).simplices
    cent = pts[tri].mean(axis=1)
    keep = np.array([shape.contains(Point(c)) for c in cent], dtype=bool)
    tri = tri[keep]
    area = triangle_areas(pts[tri])
    tri[area < 0] = tri[area < 0][:, [0, 2, 1]]
    if abs(np.abs(area).sum() - shape.area) > 1e-9 * shape.area:
        raise MeshError("coarse triangulation does not cover the polygon")
    edges = {tuple(sorted(e)) for t in tri for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))}
    nb = len(bpts)
    for k in range(nb):
        if tuple(sorted((k, (k + 1) % nb))) not in edges:
            raise MeshError("boundary segment missing from coarse triangulation")
    return pts, tri


def apply_affine(A, pts) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return np.asarray(pts, dtype=float) @ A[:, :2].T + A[:, 2]


def merge_points(pts, tol):
    """Map every point to the index of a representative within ``tol``."""
    tree = cKDTree(pts)
    rep = np.arange(len(pts))
    for i, j in sorted(tree.query_pairs(tol)):
        a, b = rep[i], rep[j]
        while rep[a] != a:
            a = rep[a]
        while rep[b] != b:
            b = rep[b]
        if a != b:
            rep[max(a, b)] = min(a, b)
    for i in range(len(pts)):
        r = i
        while rep[r] != r:
            r = rep[r]
        rep[i] = r
    uniq, ids = np.unique(rep, return_inverse=True)
    return pts[uniq], ids


def unfold(points, tris, symmetries, tol):
    """Union of the images of a triangulation under a list of affine maps."""
    allp, allt = [], []
    off = 0
    for A in symmetries:
        q = apply_affine(A, points)
        t = tris.copy() + off
        if np.linalg.det(np.asarray(A, float)[:, :2]) < 0:
            t = t[:, [0, 2, 1]]
        allp.append(q)
        allt.append(t)
        off += len(q)
    pts, ids = merge_points(np.vstack(allp), tol)
    tri = ids[np.vstack(allt)]
    key = np.sort(tri, axis=1)
    _, first = np.unique(key, axis=0, return_index=True)
    return pts, tri[np.sort(first)]


def subdivide(points, tris):
    """Split each triangle into four through edge midpoints."""
    pts = [tuple(p) for p in points]
    mid = {}

    def m(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in mid:
            mid[key] = len(pts)
            pa, pb = points[a], points[b]
            pts.append(((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2))
        return mid[key]

    out = []
    for a, b, c in tris:
        ab, bc, ca = m(a, b), m(b, c), m(c, a)
        out += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    return np.array(pts), np.array(out, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class ReferenceMesh:
    """Triangulation of one tile in its own chart.

    ``side_nodes[i]`` lists the nodes on tile side i ordered from the side's
    start vertex to its end vertex, with ``side_params[i]`` the normalized
    arclength of each.  ``sym_perm[k]`` is the node permutation induced by
    the k-th tile symmetry.
    """

    points: np.ndarray
    triangles: np.ndarray
    side_nodes: tuple
    side_params: tuple
    sym_perm: tuple
    refinement: int

    @property
    def n_nodes(self) -> int:
        return len(self.points)


def _polyline_params(points, poly, tol):
    """Normalized arclength of each point along ``poly``; NaN when off the line."""
    seg_len = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    total = seg_len.sum()
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    out = np.full(len(points), np.nan)
    for k, (a, b) in enumerate(zip(poly[:-1], poly[1:])):
        d = b - a
        L = seg_len[k]
        rel = points - a
        t = rel @ d / (L * L)
        dist = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / L
        on = (dist < tol) & (t > -tol / L) & (t < 1 + tol / L) & np.isnan(out)
        out[on] = (cum[k] + np.clip(t[on], 0, 1) * L) / total
    return out


def build_reference_mesh(tile, refinement: int) -> ReferenceMesh:
    if refinement < 1:
        raise MeshError("refinement must be >= 1")
    verts = np.asarray(tile.vertices, dtype=float)
    scale = float(np.ptp(verts, axis=0).max())
    tol = 1e-9 * scale
    fund = np.asarray(tile.fundamental if tile.fundamental is not None else verts, dtype=float)
    pts, tri = triangulate_polygon(fund, tile.h)
    pts, tri = unfold(pts, tri, tile.symmetries, tol)
    area = np.abs(triangle_areas(pts[tri])).sum()
    if abs(area - abs(polygon_area(verts))) > 1e-9 * abs(polygon_area(verts)):
        raise MeshError("unfolded fundamental domain does not tile the polygon")
    for _ in range(refinement):
        pts, tri = subdivide(pts, tri)
    area = triangle_areas(pts[tri])
    if np.any(area <= 0):
        raise MeshError("nonpositive triangle area in reference mesh")

    side_nodes, side_params = [], []
    for side in tile.sides:
        poly = verts[tile.side_vertex_indices(side)]
        t = _polyline_params(pts, poly, tol)
        idx = np.flatnonzero(~np.isnan(t))
        order = np.argsort(t[idx], kind="stable")
        nodes, params = idx[order], t[idx][order]
        if side.start == side.end:  # closed side: repeat the start node at t = 1
            nodes, params = np.append(nodes, nodes[0]), np.append(params, 1.0)
        side_nodes.append(nodes)
        side_params.append(params)

    tree = cKDTree(pts)
    perms = []
    tri_keys = {tuple(sorted(t)) for t in tri.tolist()}
    for A in tile.symmetries:
        d, j = tree.query(apply_affine(A, pts))
        if d.max() > tol * 10:
            raise MeshError("tile symmetry does not stabilize the reference mesh")
        for t in tri.tolist():
            if tuple(sorted(j[t])) not in tri_keys:
                raise MeshError("tile symmetry does not map triangles to triangles")
        perms.append(j)
    return ReferenceMesh(pts, tri, tuple(side_nodes), tuple(side_params), tuple(perms), refinement)
