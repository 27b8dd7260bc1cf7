import itertools

import numpy as np
import pytest

from steklov_iso import groups as grp
from steklov_iso.schreier import (GraphError, cayley_graph, dumps_graph, loads_graph, schreier_graph,
                                  symmetrized_adjacency_spectrum, to_dot)


@pytest.fixture(scope="module")
def graphs():
    G, H1, H2 = grp.gl3_f2()
    S = G.generators[:2]
    return G, schreier_graph(G, H1, S, ("a", "b")), schreier_graph(G, H2, S, ("a", "b"))


def test_seven_vertices_connected(graphs):
    _, g1, g2 = graphs
    for g in (g1, g2):
        assert g.vertex_count == 7
        assert g.is_connected()


def test_regular_spectrum_top(graphs):
    # two generators, A + A^t is 4-regular: top eigenvalue 4, simple (connected)
    _, g1, g2 = graphs
    for g in (g1, g2):
        s = symmetrized_adjacency_spectrum(g)
        assert s[-1] == pytest.approx(4.0, abs=1e-12)
        assert s[-2] < 4 - 1e-6


def test_isospectral_but_not_isomorphic(graphs):
    _, g1, g2 = graphs
    s1, s2 = symmetrized_adjacency_spectrum(g1), symmetrized_adjacency_spectrum(g2)
    assert np.abs(s1 - s2).max() <= 1e-12
    # exhaustive: no vertex bijection carries the colored edges of g1 onto those of g2
    assert _isomorphisms(g1, g2) == 0


def test_isomorphism_search_finds_conjugates(graphs):
    G, g1, _ = graphs
    H1 = grp.gl3_f2()[1]
    g3 = schreier_graph(G, H1.conjugate(5), G.generators[:2], ("a", "b"))
    assert _isomorphisms(g1, g3) >= 1


def _isomorphisms(g1, g2):
    count = 0
    for p in itertools.permutations(range(g1.vertex_count)):
        p = np.array(p)
        if all(np.array_equal(p[a], b[p]) for a, b in zip(g1.succ, g2.succ)):
            count += 1
    return count


def test_cayley_graph(graphs):
    G, _, _ = graphs
    g = cayley_graph(G, G.generators[:2])
    assert g.vertex_count == 168
    assert g.is_connected()
    with pytest.raises(GraphError):
        cayley_graph(G, [G.identity])


def test_text_round_trip(graphs):
    _, g1, _ = graphs
    g = loads_graph(dumps_graph(g1))
    assert g.colors == g1.colors
    assert all(np.array_equal(a, b) for a, b in zip(g.succ, g1.succ))
    assert to_dot(g1).count("->") == 14


def test_rejects_non_permutation():
    with pytest.raises(GraphError):
        loads_graph("vertices 3\na: 0 0 1\n")
