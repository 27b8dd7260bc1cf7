"""Finite groups as multiplication tables.

Elements are indices ``0..n-1`` into a multiplication table, with ``0`` the
identity.  Groups are generated from permutations or from invertible matrices
over F2 (which are turned into permutations of the vectors of F2^d).

Product convention: ``mul[g, h]`` is ``g*h``.  For matrices this is the matrix
product; for permutations it is composition ``(g*h)(x) = g(h(x))``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np


class GroupError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    mul: np.ndarray
    identity: int = 0
    labels: tuple | None = None
    generators: tuple = ()

    def __post_init__(self):
        mul = np.asarray(self.mul, dtype=np.int64)
        n = mul.shape[0]
        if mul.shape != (n, n) or n == 0:
            raise GroupError("multiplication table must be a nonempty square array")
        if mul.min() < 0 or mul.max() >= n:
            raise GroupError("table entries out of range")
        e = self.identity
        if not (np.array_equal(mul[e], np.arange(n)) and np.array_equal(mul[:, e], np.arange(n))):
            raise GroupError("identity row/column mismatch")
        inv = np.argmax(mul == e, axis=1)
        if not np.all(mul[np.arange(n), inv] == e):
            raise GroupError("some element has no inverse")
        object.__setattr__(self, "mul", mul)
        object.__setattr__(self, "inv", inv)
        if not self.generators:
            object.__setattr__(self, "generators", tuple(_greedy_generators(mul, e)))

    @property
    def order(self) -> int:
        return self.mul.shape[0]

    def __len__(self):
        return self.order

    def check_associativity(self, samples: int | None = 2000, seed: int = 0) -> bool:
        """Check associativity exhaustively (``samples=None``) or on random triples."""
        n = self.order
        mul = self.mul
        if samples is None:
            for a in range(n):
                # (a*b)*c == a*(b*c) for all b, c
                if not np.array_equal(mul[mul[a]], mul[a][mul]):
                    return False
            return True
        rng = np.random.default_rng(seed)
        a, b, c = rng.integers(0, n, size=(3, samples))
        return bool(np.all(mul[mul[a, b], c] == mul[a, mul[b, c]]))

    def conj(self, x, g):
        """x g x^-1 (vectorized over either argument)."""
        return self.mul[self.mul[x, g], self.inv[x]]

    @cached_property
    def class_of(self) -> np.ndarray:
        """Conjugacy class id of every element (ids in order of first element)."""
        n = self.order
        cls = np.full(n, -1, dtype=np.int64)
        everyone = np.arange(n)
        k = 0
        for g in range(n):
            if cls[g] < 0:
                cls[self.conj(everyone, g)] = k
                k += 1
        return cls

    @property
    def n_classes(self) -> int:
        return int(self.class_of.max()) + 1

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != self.identity:
            x = self.mul[x, g]
            k += 1
        return k

    def generated_by(self, elements) -> np.ndarray:
        """Sorted indices of the subgroup generated by ``elements``."""
        return _closure(self.mul, self.identity, list(elements))


def _closure(mul, e, gens):
    seen = np.zeros(mul.shape[0], dtype=bool)
    seen[e] = True
    frontier = np.array([e])
    gens = np.asarray(gens, dtype=np.int64)
    while frontier.size and gens.size:
        nxt = mul[np.ix_(frontier, gens)].ravel()
        nxt = np.unique(nxt[~seen[nxt]])
        seen[nxt] = True
        frontier = nxt
    return np.flatnonzero(seen)


def _greedy_generators(mul, e):
    n = mul.shape[0]
    gens: list[int] = []
    span = np.array([e])
    for g in range(n):
        if span.size == n:
            break
        if g not in set(span.tolist()):
            gens.append(g)
            span = _closure(mul, e, gens)
    return gens


@dataclass(frozen=True, eq=False)
class Subgroup:
    parent: FiniteGroup
    members: tuple
    name: str = ""

    def __post_init__(self):
        members = tuple(sorted(set(int(m) for m in self.members)))
        object.__setattr__(self, "members", members)
        G = self.parent
        if G.identity not in members:
            raise GroupError("subgroup must contain the identity")
        arr = np.array(members)
        mset = np.zeros(G.order, dtype=bool)
        mset[arr] = True
        if not mset[G.mul[np.ix_(arr, arr)]].all() or not mset[G.inv[arr]].all():
            raise GroupError("subset is not closed under multiplication/inverse")
        if G.order % len(members):
            raise GroupError("subgroup order does not divide the group order")
        object.__setattr__(self, "mask", mset)

    @property
    def order(self) -> int:
        return len(self.members)

    @property
    def index(self) -> int:
        return self.parent.order // self.order

    def __contains__(self, g):
        return bool(self.mask[g])

    def __len__(self):
        return self.order

    def conjugate(self, x: int) -> "Subgroup":
        """x H x^-1."""
        return Subgroup(self.parent, tuple(self.parent.conj(x, np.array(self.members)).tolist()))

    def same_members(self, other: "Subgroup") -> bool:
        return self.members == other.members


# -- construction -----------------------------------------------------------

def _as_matrix_list(generators):
    mats = []
    for g in generators:
        a = np.asarray(g)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            return None
        mats.append(a.astype(np.int64) % 2)
    return mats


def _det_f2(a):
    a = a.copy() % 2
    d = a.shape[0]
    for c in range(d):
        piv = np.flatnonzero(a[c:, c])
        if piv.size == 0:
            return 0
        p = c + piv[0]
        a[[c, p]] = a[[p, c]]
        for r in range(d):
            if r != c and a[r, c]:
                a[r] ^= a[c]
    return 1


def _f2_vectors(d):
    return np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int64)


def matrix_to_perm(a) -> np.ndarray:
    """Permutation of F2^d induced by v -> a v (vectors indexed by their bit tuple)."""
    a = np.asarray(a, dtype=np.int64) % 2
    d = a.shape[0]
    vecs = _f2_vectors(d)
    images = (vecs @ a.T) % 2
    weights = 1 << np.arange(d - 1, -1, -1)
    return images @ weights


def matrix_label(a) -> int:
    """9-bit (in general d*d-bit) pattern of a 0/1 matrix, row-major, MSB first."""
    bits = np.asarray(a, dtype=np.int64).ravel() % 2
    return int(bits @ (1 << np.arange(bits.size - 1, -1, -1)))


def label_matrix(label: int, d: int = 3) -> np.ndarray:
    bits = (label >> np.arange(d * d - 1, -1, -1)) & 1
    return bits.reshape(d, d)


def build_group(generators, cap: int = 10**6) -> FiniteGroup:
    """Close a list of permutations or of square 0/1 matrices (over F2).

    Element 0 of the result is the identity; ``generators`` of the result are
    the indices of the inputs.
    """
    generators = list(generators)
    if not generators:
        raise GroupError("need at least one generator")
    mats = _as_matrix_list(generators) if np.asarray(generators[0]).ndim == 2 else None
    if mats is not None:
        d = mats[0].shape[0]
        if any(m.shape != (d, d) for m in mats):
            raise GroupError("matrices must share a size")
        for m in mats:
            if not _det_f2(m):
                raise GroupError("generator matrix is not invertible over F2")
        perms = [matrix_to_perm(m) for m in mats]
    else:
        perms = [np.asarray(p, dtype=np.int64) for p in generators]
        deg = perms[0].size
        for p in perms:
            if p.size != deg or not np.array_equal(np.sort(p), np.arange(deg)):
                raise GroupError("generators must be permutations of a common set")
    dtype = np.int16 if perms[0].size < 2**15 else np.int64
    perms = [p.astype(dtype) for p in perms]
    ident = np.arange(perms[0].size, dtype=dtype)

    elements = [ident]
    index = {ident.tobytes(): 0}
    gen_idx = []
    for p in perms:
        key = p.tobytes()
        if key not in index:
            index[key] = len(elements)
            elements.append(p)
        gen_idx.append(index[key])
    head = 0
    while head < len(elements):
        x = elements[head]
        head += 1
        for p in perms:
            y = x[p]
            key = y.tobytes()
            if key not in index:
                if len(elements) >= cap:
                    raise GroupError(f"group order exceeds cap {cap}")
                index[key] = len(elements)
                elements.append(y)

    P = np.stack(elements)
    n = len(elements)
    mul = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        rows = P[i][P]
        mul[i] = [index[r.tobytes()] for r in rows]

    if mats is not None:
        d = mats[0].shape[0]
        # column j of the matrix is the image of the j-th basis vector
        basis = [1 << (d - 1 - j) for j in range(d)]
        labels = []
        for p in P:
            cols = [[(int(p[b]) >> (d - 1 - r)) & 1 for r in range(d)] for b in basis]
            labels.append(matrix_label(np.array(cols).T))
        labels = tuple(labels)
    else:
        labels = tuple(tuple(int(v) for v in p) for p in P)
    return FiniteGroup(mul, 0, labels, tuple(gen_idx))


# Generating pairs (a, b) of GL(3,2), found by exhaustive search over pairs
# with the domain-map search of the tiling module.
#
# BUSER_PAIR: the diagonal reflection of the square tile lifts to involutions
# of both Schreier surfaces, and no tile-respecting isometry joins the two
# surfaces (their mesh diameters differ).
# DENSITY_PAIR: the diagonal reflection lifts as well, and the half-turn of the
# tile lifts to an isometry from the H1-surface onto the H2-surface.
BUSER_PAIR = (((0, 0, 1), (1, 0, 0), (0, 1, 0)), ((0, 0, 1), (0, 1, 0), (1, 1, 0)))
DENSITY_PAIR = (((0, 0, 1), (0, 1, 0), (1, 1, 0)), ((0, 0, 1), (0, 1, 1), (1, 0, 0)))


def gl3_f2(generators=None):
    """GL(3, F2) with H1 = {first row (1,0,0)} and H2 = transposes of H1."""
    if generators is None:
        generators = [np.array(m) for m in BUSER_PAIR]
    G = build_group(generators)
    if G.order != 168:
        raise GroupError(f"generators span a group of order {G.order}, not GL(3,2)")
    mats = [label_matrix(l) for l in G.labels]
    index = {l: i for i, l in enumerate(G.labels)}
    h1 = [i for i, m in enumerate(mats) if tuple(m[0]) == (1, 0, 0)]
    h2 = [index[matrix_label(mats[i].T)] for i in h1]
    return G, Subgroup(G, h1, "H1"), Subgroup(G, h2, "H2")


def gl3_f2_matrices():
    """All 168 invertible 3x3 matrices over F2, by brute-force enumeration."""
    out = []
    for bits in range(512):
        m = label_matrix(bits)
        if _det_f2(m):
            out.append(m)
    return out


def symmetric_group_generators(n: int):
    """(0 1) and (0 1 ... n-1) as image arrays."""
    t = list(range(n))
    t[0], t[1] = 1, 0
    c = [(i + 1) % n for i in range(n)]
    return [t, c]


def transpose_automorphism(G: FiniteGroup) -> np.ndarray:
    """Index map of A -> (A^t)^-1 on a matrix group."""
    index = {l: i for i, l in enumerate(G.labels)}
    out = np.empty(G.order, dtype=np.int64)
    for i, l in enumerate(G.labels):
        out[G.inv[index[matrix_label(label_matrix(l).T)]]] = i
    # out currently maps (A^t)^-1 -> A; invert the permutation
    res = np.empty_like(out)
    res[out] = np.arange(G.order)
    return res


# -- Gassmann equivalence ---------------------------------------------------

def class_counts(H: Subgroup) -> np.ndarray:
    G = H.parent
    return np.bincount(G.class_of[np.array(H.members)], minlength=G.n_classes)


def almost_conjugate(G: FiniteGroup, H: Subgroup, H2: Subgroup) -> bool:
    """Every conjugacy class meets H and H2 in equally many elements."""
    _check_parent(G, H, H2)
    return bool(np.array_equal(class_counts(H), class_counts(H2)))


def fixed_point_counts(action: "CosetAction") -> np.ndarray:
    return (action.perm == np.arange(action.n_cosets)).sum(axis=1)


def permutation_character_equal(G: FiniteGroup, H: Subgroup, H2: Subgroup) -> bool:
    """Compare fixed-point counts of every g on H\\G and H2\\G."""
    _check_parent(G, H, H2)
    if H.index != H2.index:
        return False
    return bool(np.array_equal(fixed_point_counts(coset_action(G, H)),
                               fixed_point_counts(coset_action(G, H2))))


def are_conjugate_subgroups(G: FiniteGroup, H: Subgroup, H2: Subgroup) -> bool:
    _check_parent(G, H, H2)
    if H.order != H2.order:
        return False
    hm = np.array(H.members)
    for x in range(G.order):
        if np.all(H2.mask[G.conj(x, hm)]):
            return True
    return False


def conjugators(G: FiniteGroup, H: Subgroup, H2: Subgroup) -> list[int]:
    hm = np.array(H.members)
    return [x for x in range(G.order) if H.order == H2.order and np.all(H2.mask[G.conj(x, hm)])]


def _check_parent(G, *subs):
    for H in subs:
        if H.parent is not G:
            raise GroupError("subgroup belongs to a different group")


# -- coset actions and intertwiners ------------------------------------------

@dataclass(frozen=True, eq=False)
class CosetAction:
    cosets: tuple          # canonical (smallest) representative of each right coset
    coset_of: np.ndarray   # element -> coset index
    perm: np.ndarray       # perm[g, c] = coset index of (coset c) * g

    @property
    def n_cosets(self) -> int:
        return len(self.cosets)

    def matrix(self, g: int) -> np.ndarray:
        """P(g)[i, j] = 1 iff j = i.g ; P is a homomorphism for this convention."""
        m = self.n_cosets
        P = np.zeros((m, m), dtype=np.int64)
        P[np.arange(m), self.perm[g]] = 1
        return P


def coset_action(G: FiniteGroup, H: Subgroup) -> CosetAction:
    """Right action of G on the right cosets H\\G."""
    n = G.order
    coset_of = np.full(n, -1, dtype=np.int64)
    reps = []
    hm = np.array(H.members)
    for g in range(n):
        if coset_of[g] < 0:
            coset_of[G.mul[hm, g]] = len(reps)
            reps.append(g)
    reps_arr = np.array(reps)
    perm = coset_of[G.mul[reps_arr][:, :].T]  # perm[g, c] = coset_of[rep_c * g]
    return CosetAction(tuple(reps), coset_of, perm)


def pair_orbits(G: FiniteGroup, act1: CosetAction, act2: CosetAction) -> np.ndarray:
    """Orbit id of each (i, j) in cosets1 x cosets2 under the diagonal action."""
    m1, m2 = act1.n_cosets, act2.n_cosets
    parent = list(range(m1 * m2))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s in G.generators:
        p1, p2 = act1.perm[s], act2.perm[s]
        for i in range(m1):
            for j in range(m2):
                a, b = find(i * m2 + j), find(p1[i] * m2 + p2[j])
                if a != b:
                    parent[max(a, b)] = min(a, b)
    roots = np.array([find(x) for x in range(m1 * m2)])
    _, ids = np.unique(roots, return_inverse=True)
    return ids.reshape(m1, m2)


def _exact_det(rows) -> Fraction:
    a = [[Fraction(v) for v in r] for r in rows]
    n = len(a)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if a[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


def intertwiner(G: FiniteGroup, H: Subgroup, H2: Subgroup) -> np.ndarray:
    """Exact invertible T with T P2(g) = P1(g) T for all g, T 1 = 1.

    The solutions of the stacked system T P2(s) = P1(s) T (s over the group's
    generators) are exactly the matrices constant on the orbits of G on pairs
    of cosets, so the orbit indicators form an integer basis of the solution
    space.  The first small-integer combination that is invertible and has
    nonzero row sum is returned, scaled to fix the all-ones vector.

    Returns an object array of ``Fraction``.
    """
    _check_parent(G, H, H2)
    if H.index != H2.index:
        raise GroupError("subgroups have different index")
    act1, act2 = coset_action(G, H), coset_action(G, H2)
    orbits = pair_orbits(G, act1, act2)
    k = int(orbits.max()) + 1
    m = act1.n_cosets
    for bound in range(1, 4):
        for coeffs in itertools.product(range(bound + 1), repeat=k):
            if max(coeffs) != bound:
                continue
            T = np.array(coeffs, dtype=np.int64)[orbits]
            rowsum = int(T[0].sum())
            if rowsum == 0 or _exact_det(T.tolist()) == 0:
                continue
            out = np.empty((m, m), dtype=object)
            for i in range(m):
                for j in range(m):
                    out[i, j] = Fraction(int(T[i, j]), rowsum)
            if not check_intertwiner(G, out, act1, act2):
                raise GroupError("intertwiner failed verification on group elements")
            return out
    raise GroupError("no invertible intertwiner found (subgroups not Gassmann equivalent?)")


def check_intertwiner(G: FiniteGroup, T, act1: CosetAction, act2: CosetAction,
                      elements=None) -> bool:
    """Exact check of T P2(g) = P1(g) T; all elements by default."""
    if elements is None:
        elements = range(G.order)
    T = np.asarray(T, dtype=object)
    for g in elements:
        p1, p2 = act1.perm[g], act2.perm[g]
        # (T P2)[i, k] = T[i, p2^-1(k)] ; (P1 T)[i, k] = T[p1(i), k]
        inv2 = np.empty_like(p2)
        inv2[p2] = np.arange(p2.size)
        if not np.all(T[:, inv2] == T[p1, :]):
            return False
    return True


def intertwining_residual(T, P1, P2) -> float:
    """max |T P2 - P1 T| for numeric matrices."""
    T = np.asarray(T, dtype=float)
    return float(np.abs(T @ np.asarray(P2, float) - np.asarray(P1, float) @ T).max())


# -- text format ---------------------------------------------------------------

def dumps_group(G: FiniteGroup, subgroups=()) -> str:
    lines = [f"order {G.order}"]
    lines += [" ".join(str(int(v)) for v in row) for row in G.mul]
    lines.append(f"identity {G.identity}")
    for H in subgroups:
        name = H.name or "H"
        lines.append(f"subgroup {name}: " + " ".join(str(m) for m in H.members))
    return "\n".join(lines) + "\n"


def loads_group(text: str):
    """Parse the table format; returns (group, {name: subgroup})."""
    lines = [l.strip() for l in text.splitlines() if l.strip() and not l.startswith("#")]
    if not lines or not lines[0].startswith("order"):
        raise GroupError("expected 'order n' header")
    n = int(lines[0].split()[1])
    mul = np.array([[int(v) for v in l.split()] for l in lines[1:1 + n]], dtype=np.int64)
    ident_line = lines[1 + n].split()
    if ident_line[0] != "identity":
        raise GroupError("expected 'identity i' after the table")
    G = FiniteGroup(mul, int(ident_line[1]))
    subs = {}
    for l in lines[2 + n:]:
        head, _, rest = l.partition(":")
        kind, name = head.split(maxsplit=1)
        if kind != "subgroup":
            raise GroupError(f"unknown block {kind!r}")
        subs[name] = Subgroup(G, tuple(int(v) for v in rest.split()), name)
    return G, subs
