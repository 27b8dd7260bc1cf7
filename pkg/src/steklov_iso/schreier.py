"""Edge-colored Cayley and Schreier graphs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import FiniteGroup, Subgroup, coset_action


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ColoredGraph:
    """``succ[c][v]`` is the endpoint of the c-colored edge leaving v."""

    vertex_count: int
    colors: tuple
    succ: tuple

    def __post_init__(self):
        if not self.colors:
            raise GraphError("a colored graph needs at least one color")
        succ = tuple(np.asarray(s, dtype=np.int64) for s in self.succ)
        if len(succ) != len(self.colors):
            raise GraphError("one successor map per color")
        for s in succ:
            if s.shape != (self.vertex_count,) or not np.array_equal(np.sort(s), np.arange(self.vertex_count)):
                raise GraphError("successor maps must be permutations of the vertices")
        object.__setattr__(self, "succ", succ)

    def adjacency(self) -> np.ndarray:
        """A = sum over colors of the successor permutation matrices."""
        n = self.vertex_count
        A = np.zeros((n, n))
        for s in self.succ:
            np.add.at(A, (np.arange(n), s), 1.0)
        return A

    def loops(self, color) -> np.ndarray:
        c = self.colors.index(color)
        return np.flatnonzero(self.succ[c] == np.arange(self.vertex_count))

    def is_connected(self) -> bool:
        n = self.vertex_count
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            v = stack.pop()
            for s in self.succ:
                for w in (s[v], int(np.flatnonzero(s == v)[0])):
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
        return bool(seen.all())


def cayley_graph(G: FiniteGroup, S, colors=None) -> ColoredGraph:
    S = [int(s) for s in S]
    if any(s == G.identity for s in S):
        raise GraphError("the identity is not allowed as a generator")
    colors = tuple(colors) if colors is not None else tuple(f"s{i}" for i in range(len(S)))
    return ColoredGraph(G.order, colors, tuple(G.mul[:, s] for s in S))


def schreier_graph(G: FiniteGroup, H: Subgroup, S, colors=None) -> ColoredGraph:
    """Vertices are right cosets H\\G (ordered as in ``coset_action``); edges Hg -> Hgs."""
    S = [int(s) for s in S]
    colors = tuple(colors) if colors is not None else tuple(f"s{i}" for i in range(len(S)))
    act = coset_action(G, H)
    return ColoredGraph(act.n_cosets, colors, tuple(act.perm[s] for s in S))


def symmetrized_adjacency_spectrum(g: ColoredGraph) -> np.ndarray:
    """Ascending eigenvalues of A + A^t (a loop adds 2 on the diagonal)."""
    A = g.adjacency()
    return np.linalg.eigvalsh(A + A.T)


def dumps_graph(g: ColoredGraph) -> str:
    lines = [f"vertices {g.vertex_count}"]
    for c, s in zip(g.colors, g.succ):
        lines.append(f"{c}: " + " ".join(str(int(v)) for v in s))
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> ColoredGraph:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    n = int(lines[0].split()[1])
    colors, succ = [], []
    for l in lines[1:]:
        c, _, rest = l.partition(":")
        colors.append(c.strip())
        succ.append([int(v) for v in rest.split()])
    return ColoredGraph(n, tuple(colors), tuple(succ))


def to_dot(g: ColoredGraph, name: str = "G") -> str:
    palette = ["red", "blue", "darkgreen", "orange", "purple", "brown"]
    out = [f"digraph {name} {{"]
    for v in range(g.vertex_count):
        out.append(f"  {v};")
    for i, (c, s) in enumerate(zip(g.colors, g.succ)):
        col = palette[i % len(palette)]
        for v in range(g.vertex_count):
            out.append(f'  {v} -> {int(s[v])} [color={col}, label="{c}"];')
    out.append("}")
    return "\n".join(out) + "\n"
