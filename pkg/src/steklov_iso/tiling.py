"""Glued domains built from copies of one tile, their involution quotients, and meshes.

A :class:`GluedDomain` is purely combinatorial: tiles are indexed 0..n-1, a
gluing identifies side i of tile v with side j of tile w, and every unglued
side carries a boundary class tag.  A side is parametrized by normalized
arclength t from its start vertex (counterclockwise on the tile); a gluing
with ``rev=True`` matches t with 1 - t, which is the orientable way of
attaching two counterclockwise sides, and ``rev=False`` matches t with t.

Meshes are intrinsic: every triangle keeps the coordinates of its tile chart,
so nothing is ever embedded in the plane or in R^3.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components, shortest_path

from .meshgen import ReferenceMesh, build_reference_mesh, triangle_areas
from .schreier import ColoredGraph
from .tiles import TileSpec

MIRROR = "mirror"


class TilingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GluedDomain:
    tile: TileSpec
    n_tiles: int
    gluings: tuple                 # (v, i, w, j, rev)
    tags: tuple                    # tags[v][i]: class tag of an unglued side, None if glued
    name: str = "domain"
    involution: tuple | None = None  # (phi, k) when this is a quotient
    _partner: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tile = self.tile
        ns = len(tile.sides)
        partner = {}
        gl = []
        for v, i, w, j, rev in self.gluings:
            v, i, w, j, rev = int(v), int(i), int(w), int(j), bool(rev)
            for t, s in ((v, i), (w, j)):
                if not (0 <= t < self.n_tiles and 0 <= s < ns):
                    raise TilingError(f"gluing refers to a missing tile side {(t, s)}")
            if (v, i) == (w, j):
                raise TilingError("a side cannot be glued to itself")
            if (v, i) in partner or (w, j) in partner:
                raise TilingError(f"side {(v, i)} or {(w, j)} glued twice")
            li, lj = tile.side_length(i), tile.side_length(j)
            if abs(li - lj) > 1e-12 * max(1.0, li):
                raise TilingError(f"glued sides {i} and {j} differ in length")
            partner[(v, i)] = (w, j, rev)
            partner[(w, j)] = (v, i, rev)
            gl.append((v, i, w, j, rev))
        tags = tuple(tuple(t) for t in self.tags)
        if len(tags) != self.n_tiles or any(len(t) != ns for t in tags):
            raise TilingError("tags must list one entry per side of every tile")
        for v in range(self.n_tiles):
            for i, s in enumerate(tile.sides):
                glued = (v, i) in partner
                if s.kind == "glue" and not glued:
                    raise TilingError(f"glue side {s.label}{'+' if s.sign > 0 else '-'} of tile {v} is not glued")
                if not glued and not tags[v][i]:
                    raise TilingError(f"free side {i} of tile {v} has no class tag")
                if glued and tags[v][i] is not None:
                    tags = _set_tag(tags, v, i, None)
        object.__setattr__(self, "gluings", tuple(gl))
        object.__setattr__(self, "tags", tags)
        object.__setattr__(self, "_partner", partner)

    def partner(self, v: int, i: int):
        """(w, j, rev) glued to side i of tile v, or None on the boundary."""
        return self._partner.get((v, i))

    def boundary_sides(self):
        return [(v, i, self.tags[v][i]) for v in range(self.n_tiles)
                for i in range(len(self.tile.sides)) if (v, i) not in self._partner]

    def classes(self) -> list[str]:
        out = sorted({t for _, _, t in self.boundary_sides()})
        if self.involution is not None:
            out.append(MIRROR)
        return out

    def is_connected(self) -> bool:
        seen = {0}
        todo = [0]
        while todo:
            v = todo.pop()
            for i in range(len(self.tile.sides)):
                p = self.partner(v, i)
                if p and p[0] not in seen:
                    seen.add(p[0])
                    todo.append(p[0])
        return len(seen) == self.n_tiles

    def retag(self, mapping) -> "GluedDomain":
        """Copy with boundary tags renamed through ``mapping`` (missing tags kept)."""
        tags = tuple(tuple(None if t is None else mapping.get(t, t) for t in row) for row in self.tags)
        return replace(self, tags=tags)


def _set_tag(tags, v, i, value):
    row = list(tags[v])
    row[i] = value
    return tags[:v] + (tuple(row),) + tags[v + 1:]


def glue_domain(tile: TileSpec, n_tiles: int, gluings, tags=None, name="domain") -> GluedDomain:
    """Generic constructor.  ``tags`` maps a side label, or a (tile, side label)
    pair, to a class tag; by default an unglued side is tagged by its label."""
    tags = dict(tags or {})
    rows = []
    for v in range(n_tiles):
        rows.append(tuple(tags.get((v, s.label), tags.get(s.label, s.label)) for s in tile.sides))
    gl = []
    for v, i, w, j, rev in gluings:
        if isinstance(i, str):
            i = _side_by_label(tile, i)
        if isinstance(j, str):
            j = _side_by_label(tile, j)
        gl.append((v, i, w, j, rev))
    return GluedDomain(tile, n_tiles, tuple(gl), tuple(rows), name)


def _side_by_label(tile, label):
    hits = [k for k, s in enumerate(tile.sides) if s.kind == "free" and s.label == label]
    if len(hits) != 1:
        raise TilingError(f"tile has no unique free side {label!r}")
    return hits[0]


def build_surface(graph: ColoredGraph, tile: TileSpec, tags=None, name="surface") -> GluedDomain:
    """Side s of tile v is glued to side s^-1 of tile succ_s(v), orientably."""
    colors = list(graph.colors)
    if len(set(colors)) != len(colors):
        raise TilingError("repeated colors cannot be matched to distinct tile sides")
    if sorted(colors) != sorted(tile.glue_colors()):
        raise TilingError(f"graph colors {colors} do not match tile glue labels {tile.glue_colors()}")
    gluings = []
    for c, succ in zip(colors, graph.succ):
        i = tile.side_index("glue", c, 1)
        j = tile.side_index("glue", c, -1)
        for v in range(graph.vertex_count):
            gluings.append((v, i, int(succ[v]), j, True))
    return glue_domain(tile, graph.vertex_count, gluings, tags, name)


# -- maps between glued domains ----------------------------------------------------

def find_domain_maps(d1: GluedDomain, d2: GluedDomain, match_tags: bool = True,
                     symmetries=None) -> list[tuple]:
    """All tile-respecting isometries d1 -> d2 as (phi, k).

    Tile v of d1 goes to tile phi[v] of d2 by tile symmetry k.  A candidate is
    propagated from phi[0] through the gluings and accepted only if it sends
    every gluing to a gluing of the same orientation type and every boundary
    side to a boundary side (with the same tag when ``match_tags``).
    """
    if d1.tile is not d2.tile and d1.tile.name != d2.tile.name:
        raise TilingError("domain maps are only searched between domains of the same tile")
    if d1.n_tiles != d2.n_tiles or not d1.is_connected():
        return []
    tile = d1.tile
    ns = len(tile.sides)
    ks = range(len(tile.symmetries)) if symmetries is None else symmetries
    out = []
    for k in ks:
        perm, _ = tile.symmetry_side_map(k)
        for w0 in range(d2.n_tiles):
            phi = [-1] * d1.n_tiles
            phi[0] = w0
            todo = deque([0])
            ok = True
            while todo and ok:
                v = todo.popleft()
                for i in range(ns):
                    p = d1.partner(v, i)
                    q = d2.partner(phi[v], perm[i])
                    if p is None:
                        if q is not None or (match_tags and d1.tags[v][i] != d2.tags[phi[v]][perm[i]]):
                            ok = False
                            break
                        continue
                    w, j, rev = p
                    if q is None or q[1] != perm[j] or q[2] != rev:
                        ok = False
                        break
                    if phi[w] < 0:
                        phi[w] = q[0]
                        todo.append(w)
                    elif phi[w] != q[0]:
                        ok = False
                        break
            if ok and sorted(phi) == list(range(d2.n_tiles)):
                out.append((tuple(phi), k))
    return out


def is_involution(domain: GluedDomain, beta) -> bool:
    phi, k = beta
    A = np.vstack([domain.tile.symmetries[k], [0, 0, 1]])
    if not np.allclose(A @ A, np.eye(3), atol=1e-12):
        return False
    if any(phi[phi[v]] != v for v in range(domain.n_tiles)):
        return False
    trivial = list(phi) == list(range(domain.n_tiles)) and k == domain.tile.identity_index()
    return not trivial


def find_involutions(domain: GluedDomain, reflections_only: bool = False) -> list[tuple]:
    """Involutive self-maps of the domain; reflections (tile-wise) listed first."""
    out = [b for b in find_domain_maps(domain, domain) if is_involution(domain, b)]
    if reflections_only:
        out = [b for b in out if domain.tile.is_reflection(b[1])]
    return sorted(out, key=lambda b: (not domain.tile.is_reflection(b[1]), b[1], b[0]))


def quotient_by_involution(domain: GluedDomain, beta) -> GluedDomain:
    """Orbifold quotient by an involution (phi, k).

    The quotient is formed when meshing: nodes and triangles are identified
    with their images and edges left with a single triangle that are not on
    the original boundary become ``mirror`` edges.
    """
    if domain.involution is not None:
        raise TilingError("domain is already a quotient")
    phi, k = tuple(int(x) for x in beta[0]), int(beta[1])
    if len(phi) != domain.n_tiles or not 0 <= k < len(domain.tile.symmetries):
        raise TilingError("involution data does not fit the domain")
    if not is_involution(domain, (phi, k)):
        raise TilingError("map is not a nontrivial involution")
    if (phi, k) not in find_domain_maps(domain, domain, symmetries=[k]):
        raise TilingError("map does not respect the gluings and boundary tags")
    return replace(domain, involution=(phi, k), name=domain.name + "/beta")


# -- meshes --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming intrinsic triangulation of a glued domain.

    ``local[v, p]`` is the global node carrying reference node p of tile v.
    ``tri_coords`` holds chart coordinates of each triangle's corners.
    ``fixed_nodes`` lists, for a quotient, the nodes fixed by the involution.
    """

    name: str
    refinement: int
    n_nodes: int
    triangles: np.ndarray
    tri_coords: np.ndarray
    tri_tile: np.ndarray
    local: np.ndarray
    bedges: np.ndarray
    bedge_tags: tuple
    bedge_lengths: np.ndarray
    node_tile: np.ndarray
    node_xy: np.ndarray
    reference: ReferenceMesh
    fixed_nodes: np.ndarray | None = None

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def classes(self) -> list[str]:
        return sorted(set(self.bedge_tags))

    def class_edges(self, tag) -> np.ndarray:
        return np.flatnonzero(np.array(self.bedge_tags, dtype=object) == tag)

    def class_nodes(self, tag) -> np.ndarray:
        return np.unique(self.bedges[self.class_edges(tag)])

    def boundary_length(self, tag=None) -> float:
        if tag is None:
            return float(self.bedge_lengths.sum())
        return float(self.bedge_lengths[self.class_edges(tag)].sum())


def _edge_counts(tris):
    e = np.sort(np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1)
    keys, counts = np.unique(e, axis=0, return_counts=True)
    return keys, counts


def _glue_pairs(domain: GluedDomain, ref: ReferenceMesh):
    """Pairs of (tile, reference node) identified by the gluings."""
    n_loc = ref.n_nodes
    a, b = [], []
    for v, i, w, j, rev in domain.gluings:
        ni, nj = ref.side_nodes[i], ref.side_nodes[j]
        ti, tj = ref.side_params[i], ref.side_params[j]
        if rev:
            nj, tj = nj[::-1], 1.0 - tj[::-1]
        if len(ni) != len(nj) or np.abs(ti - tj).max() > 1e-9:
            raise TilingError(f"side meshes of sides {i} and {j} do not match")
        a.append(v * n_loc + ni)
        b.append(w * n_loc + nj)
    if not a:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(a), np.concatenate(b)


def _label_classes(n, a, b):
    """Component labels of the identification graph, numbered by first member."""
    g = sparse.coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
    _, lab = connected_components(g, directed=False)
    first = np.full(lab.max() + 1, n)
    np.minimum.at(first, lab, np.arange(n))
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return rank[lab]


def mesh(domain: GluedDomain, refinement: int = 1) -> Mesh:
    """Conforming mesh of the domain, quotiented if it carries an involution."""
    if int(refinement) < 1:
        raise TilingError("refinement must be >= 1")
    ref = build_reference_mesh(domain.tile, int(refinement))
    m = _surface_mesh(domain, ref)
    if domain.involution is not None:
        m = _quotient_mesh(domain, ref, m)
    return m


def _surface_mesh(domain: GluedDomain, ref: ReferenceMesh) -> Mesh:
    nt, n_loc = domain.n_tiles, ref.n_nodes
    a, b = _glue_pairs(domain, ref)
    glob = _label_classes(nt * n_loc, a, b)
    local = glob.reshape(nt, n_loc)
    n = int(glob.max()) + 1

    tris = np.vstack([local[v][ref.triangles] for v in range(nt)])
    coords = np.tile(ref.points[ref.triangles], (nt, 1, 1))
    tri_tile = np.repeat(np.arange(nt), len(ref.triangles))
    if np.any((tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])):
        raise TilingError("gluing collapses a triangle; refine the tile")
    if np.any(triangle_areas(coords) <= 0):
        raise TilingError("nonpositive triangle area")

    bedges, btags, blen = [], [], []
    for v, i, tag in domain.boundary_sides():
        nodes = ref.side_nodes[i]
        pts = ref.points[nodes]
        for k in range(len(nodes) - 1):
            bedges.append((local[v, nodes[k]], local[v, nodes[k + 1]]))
            btags.append(tag)
            blen.append(float(np.linalg.norm(pts[k + 1] - pts[k])))
    bedges = np.array(bedges, dtype=np.int64).reshape(-1, 2)
    _check_conforming(tris, bedges)

    node_tile = np.empty(n, dtype=np.int64)
    node_xy = np.empty((n, 2))
    for v in range(nt - 1, -1, -1):  # first tile containing the node wins
        node_tile[local[v]] = v
        node_xy[local[v]] = ref.points
    return Mesh(domain.name, ref.refinement, n, tris, coords, tri_tile, local, bedges,
                tuple(btags), np.array(blen), node_tile, node_xy, ref)


def _check_conforming(tris, bedges):
    keys, counts = _edge_counts(tris)
    if counts.max() > 2:
        raise TilingError("an edge is shared by more than two triangles")
    open_edges = {tuple(e) for e in keys[counts == 1]}
    bset = {tuple(sorted(e)) for e in bedges.tolist()}
    if open_edges != bset or len(bset) != len(bedges):
        raise TilingError("mesh boundary does not match the unglued tile sides")


def node_map(domain: GluedDomain, m: Mesh, phi, k) -> np.ndarray:
    """Global node permutation induced by the domain map (phi, k), verified.

    ``m`` must be the (unquotiented) mesh of ``domain`` and the map must send
    it onto a mesh with the same node numbering scheme, i.e. onto itself.
    """
    sp = m.reference.sym_perm[k]
    img = np.full(m.n_nodes, -1, dtype=np.int64)
    for v in range(domain.n_tiles):
        src, dst = m.local[v], m.local[phi[v]][sp]
        clash = (img[src] >= 0) & (img[src] != dst)
        if clash.any():
            raise TilingError("domain map is not well defined on glued nodes")
        img[src] = dst
    return img


def map_between(d1: GluedDomain, m1: Mesh, d2: GluedDomain, m2: Mesh, phi, k) -> np.ndarray:
    """Node map m1 -> m2 of the domain map (phi, k), checked on triangles and boundary."""
    sp = m1.reference.sym_perm[k]
    img = np.full(m1.n_nodes, -1, dtype=np.int64)
    for v in range(d1.n_tiles):
        src, dst = m1.local[v], m2.local[phi[v]][sp]
        if np.any((img[src] >= 0) & (img[src] != dst)):
            raise TilingError("domain map is not well defined on glued nodes")
        img[src] = dst
    if np.any(img < 0) or len(np.unique(img)) != m2.n_nodes:
        raise TilingError("domain map is not a bijection of nodes")
    t2 = {tuple(sorted(t)) for t in m2.triangles.tolist()}
    if any(tuple(sorted(img[t])) not in t2 for t in m1.triangles.tolist()):
        raise TilingError("domain map does not send triangles to triangles")
    e2 = {tuple(sorted(e)) for e in m2.bedges.tolist()}
    if any(tuple(sorted(img[e])) not in e2 for e in m1.bedges.tolist()):
        raise TilingError("domain map does not send boundary edges to boundary edges")
    return img


def _quotient_mesh(domain: GluedDomain, ref: ReferenceMesh, m: Mesh) -> Mesh:
    phi, k = domain.involution
    img = node_map(domain, m, phi, k)
    if np.any(img[img] != np.arange(m.n_nodes)):
        raise TilingError("involution does not square to the identity on nodes")
    orb = _label_classes(m.n_nodes, np.arange(m.n_nodes), img)
    n = int(orb.max()) + 1

    key = np.sort(m.triangles, axis=1)
    key_img = np.sort(img[m.triangles], axis=1)
    lookup = {tuple(t): r for r, t in enumerate(key.tolist())}
    partner = np.array([lookup.get(tuple(t), -1) for t in key_img.tolist()])
    if np.any(partner < 0):
        raise TilingError("involution does not map triangles to triangles")
    if np.any(partner == np.arange(len(partner))):
        raise TilingError("involution fixes a triangle; the fixed set must be a union of edges")
    keep = np.flatnonzero(np.arange(len(partner)) < partner)
    tris = orb[m.triangles[keep]]
    coords = m.tri_coords[keep]

    # boundary of the quotient: parent boundary edges keep their tags
    tagged = {}
    for (p, q), tag, L in zip(m.bedges.tolist(), m.bedge_tags, m.bedge_lengths):
        e = tuple(sorted((orb[p], orb[q])))
        if tagged.setdefault(e, (tag, L))[0] != tag:
            raise TilingError("involution does not preserve boundary tags")
    keys, counts = _edge_counts(tris)
    if counts.max() > 2:
        raise TilingError("quotient edge shared by more than two triangles")
    fixed = np.flatnonzero(img == np.arange(m.n_nodes))
    fixed_q = np.unique(orb[fixed])
    xy = np.zeros((n, 2))
    tile_of = np.zeros(n, dtype=np.int64)
    xy[orb] = m.node_xy
    tile_of[orb] = m.node_tile
    bedges, btags, blen = [], [], []
    mirror_nodes = set()
    for e in keys[counts == 1].tolist():
        e = tuple(e)
        if e in tagged:
            tag, L = tagged[e]
        else:
            tag = MIRROR
            # length from any triangle containing the edge
            L = _edge_length(tris, coords, e)
            mirror_nodes.update(e)
        bedges.append(e)
        btags.append(tag)
        blen.append(L)
    if set(tagged) - {tuple(e) for e in bedges}:
        raise TilingError("a parent boundary edge became interior in the quotient")
    if set(fixed_q.tolist()) != mirror_nodes:
        raise TilingError("fixed nodes of the involution differ from the mirror edge nodes")
    order = np.lexsort((np.array([b for _, b in bedges]), np.array([a for a, _ in bedges])))
    bedges = np.array(bedges, dtype=np.int64).reshape(-1, 2)[order]
    btags = tuple(btags[i] for i in order)
    blen = np.array(blen)[order]
    return Mesh(domain.name, m.refinement, n, tris, coords, m.tri_tile[keep], orb[m.local],
                bedges, btags, blen, tile_of, xy, ref, fixed_q)


def _edge_length(tris, coords, e):
    for t, c in zip(tris, coords):
        tl = t.tolist()
        if e[0] in tl and e[1] in tl:
            return float(np.linalg.norm(c[tl.index(e[0])] - c[tl.index(e[1])]))
    raise TilingError("edge not found")


# -- geometry summaries ------------------------------------------------------------

def _adjacency(m: Mesh):
    t = m.triangles
    r = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
    c = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
    A = sparse.coo_matrix((np.ones(len(r)), (r, c)), shape=(m.n_nodes, m.n_nodes)).tocsr()
    return ((A + A.T) > 0).astype(np.int8)


def combinatorial_diameter(m: Mesh, chunk: int = 512) -> int:
    """Graph diameter of the node adjacency graph (exact, all-pairs BFS in chunks)."""
    A = _adjacency(m)
    ncomp, _ = connected_components(A, directed=False)
    if ncomp != 1:
        raise TilingError("mesh is disconnected")
    best = 0
    for s in range(0, m.n_nodes, chunk):
        d = shortest_path(A, unweighted=True, directed=False, indices=np.arange(s, min(s + chunk, m.n_nodes)))
        best = max(best, int(d.max()))
    return best


def boundary_components(m: Mesh) -> list[dict]:
    """Connected components of the boundary edge graph with their lengths and tags."""
    if len(m.bedges) == 0:
        return []
    e = m.bedges
    g = sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(m.n_nodes, m.n_nodes))
    _, lab = connected_components(g, directed=False)
    comp = lab[e[:, 0]]
    out = []
    for c in np.unique(comp):
        sel = np.flatnonzero(comp == c)
        out.append({
            "edges": int(len(sel)),
            "length": float(m.bedge_lengths[sel].sum()),
            "tags": sorted({m.bedge_tags[i] for i in sel}),
        })
    return sorted(out, key=lambda d: (-d["length"], d["edges"]))


# -- export ---------------------------------------------------------------------------

def dumps_mesh(m: Mesh) -> str:
    out = [f"mesh {m.name}", f"refinement {m.refinement}", f"nodes {m.n_nodes}"]
    out += [f"{int(t)} {x:.17g} {y:.17g}" for t, (x, y) in zip(m.node_tile, m.node_xy)]
    out.append(f"triangles {m.n_triangles}")
    for t, tile, c in zip(m.triangles, m.tri_tile, m.tri_coords):
        out.append(f"{int(tile)} {t[0]} {t[1]} {t[2]} " + " ".join(f"{v:.17g}" for v in c.ravel()))
    out.append(f"boundary {len(m.bedges)}")
    out += [f"{a} {b} {tag}" for (a, b), tag in zip(m.bedges.tolist(), m.bedge_tags)]
    return "\n".join(out) + "\n"
