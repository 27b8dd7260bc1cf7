"""Builtin scenes: the domain pairs, boundary classes and default parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import groups as grp
from .schreier import schreier_graph
from .tiles import get_tile, TileSpec
from .tiling import GluedDomain, build_surface, find_domain_maps, find_involutions, glue_domain

CORNERS = ("c00", "c40", "c44", "c04")
SQRT_HALF = 1.0 / math.sqrt(2.0)
# the 2x2 transplantation of the two-triangle scenes (M -> M', P -> P')
TWO_TRIANGLE_T = np.array([[SQRT_HALF, -SQRT_HALF], [SQRT_HALF, SQRT_HALF]])


@dataclass
class SunadaPair:
    G: grp.FiniteGroup
    H1: grp.Subgroup
    H2: grp.Subgroup
    S: tuple
    D1: GluedDomain
    D2: GluedDomain

    def intertwiner(self):
        return grp.intertwiner(self.G, self.H1, self.H2)


def sunada_pair(tile="buser", generators=None, tags=None, colors=("a", "b")) -> SunadaPair:
    """The two Schreier-graph surfaces M(H1\\G, S) and M(H2\\G, S) of GL(3,2)."""
    if generators is None:
        generators = grp.BUSER_PAIR
    gens = [np.array(g) for g in generators]
    G, H1, H2 = grp.gl3_f2(gens)
    S = tuple(G.generators[: len(gens)])
    t = tile if isinstance(tile, TileSpec) else get_tile(tile)
    D1 = build_surface(schreier_graph(G, H1, S, colors), t, tags, name="M1")
    D2 = build_surface(schreier_graph(G, H2, S, colors), t, tags, name="M2")
    return SunadaPair(G, H1, H2, S, D1, D2)


def buser_pair(generators=None) -> SunadaPair:
    """Buser-style pair; every corner arc carries the single class ``arc``."""
    return sunada_pair("buser", generators, {c: "arc" for c in CORNERS})


def density_pair(generators=None) -> SunadaPair:
    """Cross-tile pair with one class per corner notch (densities differ per corner)."""
    return sunada_pair("cross", generators or grp.DENSITY_PAIR, None)


def diagonal_involutions(pair: SunadaPair):
    """The lifted diagonal reflections of both surfaces (first reflection found)."""
    out = []
    for D in (pair.D1, pair.D2):
        inv = find_involutions(D, reflections_only=True)
        if not inv:
            raise ValueError(f"no reflection involution lifts to {D.name}")
        out.append(inv[0])
    return tuple(out)


def half_turn_maps(pair: SunadaPair):
    """Domain maps M1 -> M2 built from the tile's half-turn (tags may differ)."""
    t = pair.D1.tile
    k = _half_turn_index(t)
    return find_domain_maps(pair.D1, pair.D2, match_tags=False, symmetries=[k])


def _half_turn_index(t: TileSpec) -> int:
    for k, A in enumerate(t.symmetries):
        if np.allclose(A[:, :2], -np.eye(2), atol=1e-12):
            return k
    raise ValueError("tile has no half-turn symmetry")


# -- two-triangle mixed-condition scenes ----------------------------------------------

def two_triangle_pair(which: str = "M", arc_segments: int = 8, h: float = 0.4):
    """The two-tile pairs (M, M') and (P, P').

    M glues two copies of the notched right triangle along the hypotenuse C,
    M' glues them along the notched leg.  Tags are the boundary classes
    ``arc`` (Robin / Steklov), ``neumann`` and ``dirichlet``.  Returns
    (src, dst, T) with T the tile-wise transplantation from src to dst.
    """
    which = which.upper()
    if which not in ("M", "P"):
        raise ValueError("two_triangle_pair takes 'M' or 'P'")
    if which == "M":
        t = get_tile("notched_A", arc_segments=arc_segments, h=h)
        glued_leg, outer_leg = ("A1", "A2"), ("B",)
    else:
        t = get_tile("notched_B", arc_segments=arc_segments, h=h)
        glued_leg, outer_leg = ("A",), ("B1", "B2")
    D = "dirichlet"
    tags = {"arc": "arc"}
    for s in outer_leg:
        tags[s] = D
    for s in glued_leg:
        tags[(0, s)] = "neumann"
        tags[(1, s)] = D
    src = glue_domain(t, 2, [(0, "C", 1, "C", False)], tags, name=which)
    tags2 = {"arc": "arc", (0, "C"): D, (1, "C"): "neumann"}
    for s in outer_leg:
        tags2[s] = D
    dst = glue_domain(t, 2, [(0, s, 1, s, False) for s in glued_leg], tags2, name=which + "'")
    return src, dst, TWO_TRIANGLE_T.copy()


def single_tile(tile="disk64", **kw) -> GluedDomain:
    t = tile if isinstance(tile, TileSpec) else get_tile(tile, **kw)
    return glue_domain(t, 1, [], None, name=t.name)


# -- registry used by the CLI ---------------------------------------------------------------

SCENES = {
    "buser": dict(kind="sunada", builder=buser_pair, bc={"arc": "steklov"}),
    "buser-sloshing": dict(kind="sloshing", builder=buser_pair, bc={"arc": "steklov", "mirror": "neumann"}),
    "density": dict(kind="density", builder=density_pair,
                    rho={"c00": 1.0, "c40": 0.5, "c44": 2.0, "c04": 0.5}),
    "triangles-M": dict(kind="two_triangle", which="M", bc={"arc": "steklov", "neumann": "neumann", "dirichlet": "dirichlet"}),
    "triangles-P": dict(kind="two_triangle", which="P", bc={"arc": "steklov", "neumann": "neumann", "dirichlet": "dirichlet"}),
    "disk": dict(kind="single", tile="disk64", bc={"rim": "steklov"}),
    "square": dict(kind="single", tile="square", bc={"bottom": "steklov", "right": "steklov",
                                                     "top": "steklov", "left": "steklov"}),
}
