import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steklov_iso import scenes as sc
from steklov_iso.meshgen import MeshError, build_reference_mesh, triangle_areas, triangulate_polygon
from steklov_iso.tiles import TileError, dumps_tile, get_tile, loads_tile
from steklov_iso.tiling import (MIRROR, TilingError, boundary_components, find_domain_maps,
                                find_involutions, glue_domain, map_between, mesh, node_map,
                                quotient_by_involution)

# hand-derived geometry of the shipped tile: [0,4]^2 minus four unit quarter
# disks, each replaced by its inscribed 4-segment polygon
ARC_LEN = 8 * math.sin(math.pi / 16)
TILE_AREA = 16 - 8 * math.sin(math.pi / 8)


def euler(m):
    e = {tuple(sorted(x)) for t in m.triangles.tolist() for x in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))}
    return m.n_nodes - len(e) + m.n_triangles


def test_tile_geometry():
    t = get_tile("buser")
    assert t.area == pytest.approx(TILE_AREA, rel=1e-14)
    glue = [i for i, s in enumerate(t.sides) if s.kind == "glue"]
    free = [i for i, s in enumerate(t.sides) if s.kind == "free"]
    assert [t.side_length(i) for i in glue] == pytest.approx([2.0] * 4)
    assert [t.side_length(i) for i in free] == pytest.approx([ARC_LEN] * 4)
    assert len(t.symmetries) == 8


def test_tile_round_trip():
    for name in ("buser", "cross", "notched_A", "disk64"):
        t = get_tile(name)
        t2 = loads_tile(dumps_tile(t))
        assert np.allclose(t2.vertices, t.vertices)
        assert [s.label for s in t2.sides] == [s.label for s in t.sides]
    with pytest.raises(TileError):
        get_tile("hexagon")


@settings(max_examples=15, deadline=None)
@given(st.integers(3, 9), st.floats(0.15, 0.6))
def test_triangulate_regular_polygon(n, h):
    ang = 2 * np.pi * np.arange(n) / n
    poly = np.c_[np.cos(ang), np.sin(ang)]
    pts, tri = triangulate_polygon(poly, h)
    a = triangle_areas(pts[tri])
    assert (a > 0).all()
    assert a.sum() == pytest.approx(0.5 * n * np.sin(2 * np.pi / n), rel=1e-12)


def test_triangulate_rejects_self_intersection():
    with pytest.raises(MeshError):
        triangulate_polygon([(0, 0), (1, 1), (1, 0), (0, 1)], 0.3)


@pytest.mark.parametrize("name", ["buser", "cross", "disk64"])
def test_reference_mesh_symmetric(name):
    t = get_tile(name)
    ref = build_reference_mesh(t, 1)
    assert np.abs(triangle_areas(ref.points[ref.triangles])).sum() == pytest.approx(t.area, rel=1e-12)
    for perm in ref.sym_perm:
        assert np.array_equal(np.sort(perm), np.arange(ref.n_nodes))
    for params in ref.side_params:
        assert params[0] == pytest.approx(0.0, abs=1e-12)
        assert params[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(params) > 0)


def test_refinement_quadruples_triangles():
    t = get_tile("square", h=0.5)
    r1, r2 = build_reference_mesh(t, 1), build_reference_mesh(t, 2)
    assert len(r2.triangles) == 4 * len(r1.triangles)


# -- glued domains -----------------------------------------------------------------------

def test_buser_surfaces(buser):
    for D in (buser.D1, buser.D2):
        assert D.n_tiles == 7
        assert D.is_connected()
        assert len(D.gluings) == 14
        assert D.classes() == ["arc"]


def test_no_tile_isometry(buser):
    assert find_domain_maps(buser.D1, buser.D2) == []
    assert len(find_domain_maps(buser.D1, buser.D1)) >= 1


def test_surface_mesh_topology():
    p = sc.buser_pair()
    for D in (p.D1, p.D2):
        m = mesh(D, 1)
        # 7 disks, 14 glued edges, 28 arcs, 28 vertices: chi = 28 - 42 + 7
        assert euler(m) == -7
        assert len(boundary_components(m)) == 9
        assert m.boundary_length() == pytest.approx(28 * ARC_LEN, rel=1e-13)
        assert np.abs(triangle_areas(m.tri_coords)).sum() == pytest.approx(7 * TILE_AREA, rel=1e-13)


def test_involution_and_quotient():
    p = sc.buser_pair()
    beta = sc.diagonal_involutions(p)[0]
    assert beta[1] == 5   # the y = x reflection
    m = mesh(p.D1, 1)
    img = node_map(p.D1, m, *beta)
    assert np.array_equal(img[img], np.arange(m.n_nodes))
    fixed = int((img == np.arange(m.n_nodes)).sum())
    Q = quotient_by_involution(p.D1, beta)
    mq = mesh(Q, 1)
    assert MIRROR in mq.classes()
    assert mq.n_nodes == (m.n_nodes + fixed) // 2
    assert len(mq.fixed_nodes) == fixed
    assert set(mq.fixed_nodes.tolist()) == set(mq.class_nodes(MIRROR).tolist())
    assert mq.n_triangles * 2 == m.n_triangles


def test_quotient_rejects_non_involution():
    p = sc.buser_pair()
    with pytest.raises(TilingError):
        quotient_by_involution(p.D1, (tuple(range(7)), 0))


def test_density_half_turn():
    p = sc.density_pair()
    taus = sc.half_turn_maps(p)
    assert taus
    phi, k = taus[0]
    m1, m2 = mesh(p.D1, 1), mesh(p.D2, 1)
    img = map_between(p.D1, m1, p.D2, m2, phi, k)
    assert np.array_equal(np.sort(img), np.arange(m2.n_nodes))
    # tags are not preserved, so no tag-respecting isometry exists
    assert find_domain_maps(p.D1, p.D2) == []


def test_two_triangle_domains():
    for which in ("M", "P"):
        src, dst, T = sc.two_triangle_pair(which)
        assert src.n_tiles == dst.n_tiles == 2
        for D in (src, dst):
            assert sorted(D.classes()) == ["arc", "dirichlet", "neumann"]
        assert np.allclose(T @ T.T, np.eye(2))


def test_glue_errors():
    t = get_tile("square")
    with pytest.raises(TilingError):
        glue_domain(t, 2, [(0, 1, 1, 1, False), (0, 1, 1, 3, False)])
    with pytest.raises(TilingError):
        glue_domain(t, 1, [(0, 0, 0, 0, False)])


@pytest.fixture(scope="module")
def cayley_surface():
    from steklov_iso import groups as grp
    from steklov_iso.schreier import cayley_graph
    from steklov_iso.tiles import get_tile
    from steklov_iso.tiling import build_surface
    G, H1, H2 = grp.gl3_f2()
    t = get_tile("buser")
    D = build_surface(cayley_graph(G, G.generators[:2], ("a", "b")), t, {c: "arc" for c in sc.CORNERS})
    return G, H1, D, mesh(D, 1)


def test_deck_action(cayley_surface):
    # left multiplication by g permutes the tiles of M(G, S) and the mesh
    G, _, D, m = cayley_surface
    ident = D.tile.identity_index()
    for g in (G.generators[0], G.generators[1], 17):
        phi = tuple(int(v) for v in G.mul[g])
        img = map_between(D, m, D, m, phi, ident)
        assert np.array_equal(np.sort(img), np.arange(m.n_nodes))
    assert len(find_domain_maps(D, D, symmetries=[ident])) == G.order


def test_quotient_by_subgroup_counts(cayley_surface):
    # H-orbits of Cayley-mesh nodes are the nodes of the Schreier surface mesh
    G, H1, D, m = cayley_surface
    ident = D.tile.identity_index()
    parent = np.arange(m.n_nodes)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for h in H1.members:
        img = node_map(D, m, tuple(int(v) for v in G.mul[h]), ident)
        for a, b in zip(range(m.n_nodes), img):
            ra, rb = find(a), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    orbits = len({find(x) for x in range(m.n_nodes)})
    schreier = mesh(sc.buser_pair().D1, 1)
    assert orbits == schreier.n_nodes
    assert m.n_triangles == 24 * schreier.n_triangles
