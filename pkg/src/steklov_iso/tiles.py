"""Polygonal tiles: geometry, side labels, symmetries, and the shipped tiles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .meshgen import apply_affine, polygon_area


class TileError(ValueError):
    pass


@dataclass(frozen=True)
class Side:
    """Boundary stretch from vertex ``start`` to vertex ``end`` (counterclockwise).

    ``kind`` is ``"glue"`` (``label`` is a generator color, ``sign`` is +1 for
    s and -1 for s^-1) or ``"free"`` (``label`` is the boundary class tag).
    """

    start: int
    end: int
    kind: str
    label: str
    sign: int = 1

    @property
    def key(self):
        return (self.label, self.sign) if self.kind == "glue" else None


IDENTITY = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))


@dataclass(frozen=True, eq=False)
class TileSpec:
    name: str
    vertices: np.ndarray
    sides: tuple
    symmetries: tuple = (IDENTITY,)
    fundamental: np.ndarray | None = None
    h: float = 0.5

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", v)
        syms = tuple(np.asarray(A, dtype=float) for A in self.symmetries)
        object.__setattr__(self, "symmetries", syms)
        if self.fundamental is not None:
            object.__setattr__(self, "fundamental", np.asarray(self.fundamental, dtype=float))
        self.validate()

    # -- geometry helpers --------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def side_vertex_indices(self, side: Side) -> list[int]:
        n = self.n_vertices
        out = [side.start]
        k = side.start
        if side.start == side.end:  # one side running around the whole boundary
            k = (k + 1) % n
            out.append(k)
        while k != side.end:
            k = (k + 1) % n
            out.append(k)
        return out

    def side_length(self, i: int) -> float:
        pts = self.vertices[self.side_vertex_indices(self.sides[i])]
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())

    def side_index(self, kind, label, sign=1) -> int:
        for i, s in enumerate(self.sides):
            if s.kind == kind and s.label == label and (kind != "glue" or s.sign == sign):
                return i
        raise KeyError((kind, label, sign))

    def glue_colors(self) -> list[str]:
        out = []
        for s in self.sides:
            if s.kind == "glue" and s.label not in out:
                out.append(s.label)
        return out

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    # -- symmetry action on sides ------------------------------------------
    def symmetry_side_map(self, k: int):
        """(side permutation, orientation_reversed) induced by symmetry k."""
        A = self.symmetries[k]
        img = apply_affine(A, self.vertices)
        tol = 1e-9 * float(np.ptp(self.vertices, axis=0).max())
        vmap = []
        for p in img:
            d = np.linalg.norm(self.vertices - p, axis=1)
            j = int(np.argmin(d))
            if d[j] > tol:
                raise TileError(f"symmetry {k} does not map tile vertices to vertices")
            vmap.append(j)
        reflect = np.linalg.det(A[:, :2]) < 0
        perm = []
        for s in self.sides:
            a, b = vmap[s.start], vmap[s.end]
            if reflect:
                a, b = b, a
            if s.start == s.end:
                hits = [i for i, t in enumerate(self.sides) if t.start == t.end]
            else:
                hits = [i for i, t in enumerate(self.sides) if t.start == a and t.end == b]
            if len(hits) != 1:
                raise TileError(f"symmetry {k} does not map sides onto sides")
            perm.append(hits[0])
        return perm, bool(reflect)

    def is_reflection(self, k: int) -> bool:
        return bool(np.linalg.det(self.symmetries[k][:, :2]) < 0)

    def identity_index(self) -> int:
        for k, A in enumerate(self.symmetries):
            if np.allclose(A, IDENTITY):
                return k
        raise TileError("identity missing from symmetry list")

    def validate(self):
        v = self.vertices
        if polygon_area(v) <= 0:
            raise TileError("tile vertices must be listed counterclockwise")
        from shapely.geometry import Polygon

        if not Polygon(v).is_valid:
            raise TileError("tile polygon is not simple")
        # sides cover the boundary exactly once, in order
        covered = []
        for s in self.sides:
            covered += self.side_vertex_indices(s)[:-1]
        if sorted(covered) != list(range(self.n_vertices)):
            raise TileError("sides must partition the tile boundary")
        glue = {}
        for i, s in enumerate(self.sides):
            if s.kind == "glue":
                if len(self.side_vertex_indices(s)) != 2:
                    raise TileError("glue sides must be single straight segments")
                if s.key in glue:
                    raise TileError(f"duplicate glue side {s.key}")
                glue[s.key] = i
            elif s.kind != "free":
                raise TileError(f"unknown side kind {s.kind!r}")
        for (lab, sign), i in glue.items():
            j = glue.get((lab, -sign))
            if j is None:
                raise TileError(f"glue side {lab}{'+' if sign > 0 else '-'} has no partner")
            if abs(self.side_length(i) - self.side_length(j)) > 1e-12 * max(1.0, self.side_length(i)):
                raise TileError(f"sides {lab} and {lab}^-1 differ in length")
        self.identity_index()
        for k in range(len(self.symmetries)):
            perm, _ = self.symmetry_side_map(k)
            for i, j in enumerate(perm):
                a, b = self.sides[i], self.sides[j]
                if a.kind != b.kind:
                    raise TileError(f"symmetry {k} maps a {a.kind} side to a {b.kind} side")
        # closure under composition
        mats = [np.vstack([A, [0, 0, 1]]) for A in self.symmetries]
        for X in mats:
            for Y in mats:
                Z = X @ Y
                if not any(np.allclose(Z, W, atol=1e-9) for W in mats):
                    raise TileError("symmetry list is not closed under composition")


# -- shipped tiles ------------------------------------------------------------

def _rot(theta, c):
    cs, sn = math.cos(theta), math.sin(theta)
    R = np.array([[cs, -sn], [sn, cs]])
    return np.hstack([R, (np.asarray(c) - R @ c)[:, None]])


def _refl(theta, c):
    """Reflection across the line through c at angle theta."""
    cs, sn = math.cos(2 * theta), math.sin(2 * theta)
    R = np.array([[cs, sn], [sn, -cs]])
    return np.hstack([R, (np.asarray(c) - R @ c)[:, None]])


def dihedral4(center=(2.0, 2.0)):
    """The 8 symmetries of a square about ``center`` (identity first)."""
    c = np.asarray(center, dtype=float)
    out = [_rot(k * math.pi / 2, c) for k in range(4)]
    out += [_refl(k * math.pi / 4, c) for k in range(4)]
    return tuple(np.round(A, 15) + 0.0 for A in out)


def buser_tile(arc_segments: int = 4, h: float = 0.5) -> TileSpec:
    """Square [0,4]^2 with concave polygonal quarter circles (radius 1) cut at the corners.

    Glue sides of length 2 sit in the middle of each edge: top a, right a^-1,
    bottom b, left b^-1.  Corner arcs are free sides tagged c00, c40, c44, c04.
    The reflection in the diagonal y = x exchanges a with a^-1 and b with b^-1.
    """
    if arc_segments % 2:
        raise TileError("arc_segments must be even so the diagonals hit arc vertices")
    corners = [((4.0, 0.0), math.pi, "c40"), ((4.0, 4.0), 1.5 * math.pi, "c44"),
               ((0.0, 4.0), 0.0, "c04"), ((0.0, 0.0), 0.5 * math.pi, "c00")]
    glue = [("b", 1), ("a", -1), ("a", 1), ("b", -1)]  # bottom, right, top, left
    verts, sides = [], []
    starts = [(1.0, 0.0), (4.0, 1.0), (3.0, 4.0), (0.0, 3.0)]
    for k in range(4):
        i0 = len(verts)
        verts.append(starts[k])
        (cx, cy), th0, tag = corners[k]
        arc = []
        for j in range(arc_segments + 1):
            th = th0 - 0.5 * math.pi * j / arc_segments
            arc.append((cx + math.cos(th), cy + math.sin(th)))
        sides.append(Side(i0, i0 + 1, "glue", glue[k][0], glue[k][1]))
        verts += arc[:-1]
        sides.append(Side(i0 + 1, (i0 + 1 + arc_segments) % (4 * (arc_segments + 1)), "free", tag))
    verts = np.array(verts)
    half = arc_segments // 2
    fund = [(2.0, 2.0), (2.0, 0.0), (3.0, 0.0)]
    for j in range(1, half + 1):
        th = math.pi - 0.5 * math.pi * j / arc_segments
        fund.append((4.0 + math.cos(th), math.sin(th)))
    return TileSpec("buser", verts, tuple(sides), dihedral4(), np.array(fund), h)


def cross_tile(h: float = 0.5) -> TileSpec:
    """Plus-shaped cross: [0,4]^2 minus the four unit corner squares.

    Arm ends are glue sides (labels as in ``buser_tile``); each corner notch
    is a free side tagged c00, c40, c44, c04.  Full square symmetry, so the
    diagonal reflection and the half-turn commute.
    """
    verts = np.array([(1, 0), (3, 0), (3, 1), (4, 1), (4, 3), (3, 3), (3, 4), (1, 4),
                      (1, 3), (0, 3), (0, 1), (1, 1)], dtype=float)
    sides = (
        Side(0, 1, "glue", "b", 1), Side(1, 3, "free", "c40"),
        Side(3, 4, "glue", "a", -1), Side(4, 6, "free", "c44"),
        Side(6, 7, "glue", "a", 1), Side(7, 9, "free", "c04"),
        Side(9, 10, "glue", "b", -1), Side(10, 0, "free", "c00"),
    )
    fund = np.array([(2, 2), (2, 0), (3, 0), (3, 1)], dtype=float)
    return TileSpec("cross", verts, sides, dihedral4(), fund, h)


def notched_triangle_tile(hole_on: str = "A", arc_segments: int = 8, h: float = 0.4,
                          leg: float = 4.0, center: float = 1.7, radius: float = 1.0) -> TileSpec:
    """Right isosceles triangle O=(0,0), X=(leg,0), Y=(0,leg) with a half disk removed.

    The half disk (radius ``radius``) sits on leg A (O to X) or leg B (O to Y),
    centered at distance ``center`` from the right-angle vertex.  Side names:
    the straight pieces of the notched leg are A1/A2 (or B1/B2, numbered from
    O), the notch is ``arc``, the hypotenuse is ``C``.
    """
    if hole_on not in ("A", "B"):
        raise TileError("hole_on must be 'A' or 'B'")
    arc = []
    for j in range(arc_segments + 1):
        th = math.pi - math.pi * j / arc_segments
        arc.append((center + radius * math.cos(th), radius * math.sin(th)))
    if hole_on == "A":
        verts = [(0.0, 0.0)] + arc + [(leg, 0.0), (0.0, leg)]
        m = len(arc)
        sides = (
            Side(0, 1, "free", "A1"), Side(1, m, "free", "arc"), Side(m, m + 1, "free", "A2"),
            Side(m + 1, m + 2, "free", "C"), Side(m + 2, 0, "free", "B"),
        )
    else:
        # mirror image in y = x, relisted counterclockwise
        arc_b = [(y, x) for (x, y) in arc][::-1]   # from (0, c+r) down to (0, c-r)
        verts = [(0.0, 0.0), (leg, 0.0), (0.0, leg)] + arc_b
        m = len(arc_b)
        sides = (
            Side(0, 1, "free", "A"), Side(1, 2, "free", "C"), Side(2, 3, "free", "B2"),
            Side(3, 2 + m, "free", "arc"), Side(2 + m, 0, "free", "B1"),
        )
    return TileSpec(f"notched_triangle_{hole_on}", np.array(verts), sides, (IDENTITY,), None, h)


def polygon_disk_tile(n: int = 64, h: float = 0.1, radius: float = 1.0) -> TileSpec:
    """Regular n-gon inscribed in the circle of given radius, one free class ``rim``.

    Declared symmetries: the square subgroup of the n-gon's dihedral group
    (n must be divisible by 8 so the diagonal reflections fix vertices).
    """
    if n % 8:
        raise TileError("n must be divisible by 8")
    verts = np.array([(radius * math.cos(2 * math.pi * k / n), radius * math.sin(2 * math.pi * k / n))
                      for k in range(n)])
    sides = (Side(0, 0, "free", "rim"),)
    k8 = n // 8
    fund = [(0.0, 0.0)] + [tuple(verts[k]) for k in range(k8 + 1)]
    return TileSpec(f"disk{n}", verts, sides, dihedral4((0.0, 0.0)), np.array(fund), h)


def square_tile(side: float = 1.0, h: float | None = None, tags=("bottom", "right", "top", "left"),
                symmetric: bool = True) -> TileSpec:
    """Square [0, side]^2 with each edge a free side (used for validation)."""
    s = float(side)
    verts = np.array([(0, 0), (s, 0), (s, s), (0, s)], dtype=float)
    sides = tuple(Side(k, (k + 1) % 4, "free", tags[k]) for k in range(4))
    if symmetric and len(set(tags)) == 1:
        syms = dihedral4((s / 2, s / 2))
        fund = np.array([(s / 2, s / 2), (s / 2, 0), (s, 0)])
    else:
        syms, fund = (IDENTITY,), None
    return TileSpec("square", verts, sides, syms, fund, h if h is not None else s / 4)


SHIPPED_TILES = {
    "buser": buser_tile,
    "cross": cross_tile,
    "notched_A": lambda **kw: notched_triangle_tile("A", **kw),
    "notched_B": lambda **kw: notched_triangle_tile("B", **kw),
    "disk64": lambda **kw: polygon_disk_tile(64, **kw),
    "square": square_tile,
}


def get_tile(name: str, **kw) -> TileSpec:
    try:
        return SHIPPED_TILES[name](**kw)
    except KeyError:
        raise TileError(f"unknown tile {name!r}; shipped: {sorted(SHIPPED_TILES)}") from None


# -- tile files -----------------------------------------------------------------

def _g(x) -> str:
    return f"{float(x):.17g}"


def dumps_tile(tile: TileSpec) -> str:
    out = [f"tile {tile.name}", f"h {_g(tile.h)}", f"vertices {tile.n_vertices}"]
    out += [f"{_g(x)} {_g(y)}" for x, y in tile.vertices]
    out.append(f"sides {len(tile.sides)}")
    for s in tile.sides:
        if s.kind == "glue":
            out.append(f"{s.start} {s.end} glue {s.label} {'+' if s.sign > 0 else '-'}")
        else:
            out.append(f"{s.start} {s.end} free {s.label}")
    out.append(f"symmetries {len(tile.symmetries)}")
    for A in tile.symmetries:
        out.append(" ".join(_g(v) for v in np.asarray(A, float).ravel()))
    if tile.fundamental is not None:
        out.append(f"fundamental {len(tile.fundamental)}")
        out += [f"{_g(x)} {_g(y)}" for x, y in tile.fundamental]
    return "\n".join(out) + "\n"


def loads_tile(text: str) -> TileSpec:
    lines = [l.split("#")[0].strip() for l in text.splitlines()]
    lines = [l for l in lines if l]
    pos = 0

    def take():
        nonlocal pos
        pos += 1
        return lines[pos - 1].split()

    name, h = "tile", 0.5
    verts, sides, syms, fund = [], [], [], None
    while pos < len(lines):
        head = take()
        key = head[0]
        if key == "tile":
            name = head[1]
        elif key == "h":
            h = float(head[1])
        elif key == "vertices":
            verts = [tuple(map(float, take())) for _ in range(int(head[1]))]
        elif key == "sides":
            for _ in range(int(head[1])):
                f = take()
                if f[2] == "glue":
                    sides.append(Side(int(f[0]), int(f[1]), "glue", f[3], 1 if f[4] == "+" else -1))
                else:
                    sides.append(Side(int(f[0]), int(f[1]), "free", f[3]))
        elif key == "symmetries":
            syms = [np.array(list(map(float, take()))).reshape(2, 3) for _ in range(int(head[1]))]
        elif key == "fundamental":
            fund = np.array([tuple(map(float, take())) for _ in range(int(head[1]))])
        else:
            raise TileError(f"unknown tile-file key {key!r}")
    return TileSpec(name, np.array(verts), tuple(sides), tuple(syms) or (IDENTITY,), fund, h)
