"""P1 finite elements for Dirichlet, Neumann, Robin and Steklov eigenproblems.

Conventions (u is a nodal vector on the non-Dirichlet nodes):

* Robin:    (K - sigma B) u = alpha M u      (boundary condition  du/dn = sigma u)
* Steklov:  (K - alpha M) u = sigma B u      (equation  Lap u = alpha u in the sign
            convention where Lap is the positive Laplacian, i.e. -div grad)

B is the weighted boundary mass of the parametric classes: a Steklov class
contributes rho times its boundary mass, a Robin class its weight times its
boundary mass.  Neumann classes contribute nothing and Dirichlet classes are
eliminated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import sparse
from scipy.sparse.linalg import eigsh, splu

from .tiling import Mesh

DENSE_LIMIT = 1200
PIVOT_MARGIN = 1e-8


class SpectralError(RuntimeError):
    pass


# -- boundary conditions ----------------------------------------------------------

@dataclass(frozen=True)
class Condition:
    kind: str            # "dirichlet" | "neumann" | "robin" | "steklov"
    weight: float = 0.0  # rho for steklov, coefficient scale for robin

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann", "robin", "steklov"):
            raise ValueError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "steklov" and self.weight < 0:
            raise ValueError("density rho must be nonnegative")

    @property
    def parametric(self) -> bool:
        return self.kind in ("robin", "steklov")


def Dirichlet() -> Condition:
    return Condition("dirichlet")


def Neumann() -> Condition:
    return Condition("neumann")


def Robin(weight: float = 1.0) -> Condition:
    return Condition("robin", float(weight))


def Steklov(rho: float = 1.0) -> Condition:
    return Condition("steklov", float(rho))


def parse_condition(spec) -> Condition:
    """'dirichlet', 'neumann', 'robin', 'robin:2', 'steklov', 'steklov:0.5', or a Condition."""
    if isinstance(spec, Condition):
        return spec
    if isinstance(spec, dict):
        return Condition(spec["kind"], float(spec.get("weight", spec.get("rho", 1.0))))
    kind, _, w = str(spec).partition(":")
    kind = kind.strip().lower()
    if kind in ("robin", "steklov"):
        return Condition(kind, float(w) if w else 1.0)
    return Condition(kind)


class BoundaryConditionMap(dict):
    """Class tag -> Condition."""

    def __init__(self, items=None, **kw):
        super().__init__()
        for k, v in dict(items or {}, **kw).items():
            self[k] = parse_condition(v)

    def covers(self, tags) -> list:
        return [t for t in tags if t not in self]

    def describe(self) -> str:
        parts = []
        for t in sorted(self):
            c = self[t]
            parts.append(f"{t}={c.kind}" + (f":{c.weight:g}" if c.parametric else ""))
        return ";".join(parts)


# -- assembly -------------------------------------------------------------------------

def element_matrices(coords):
    """P1 stiffness and mass blocks for triangles given as (T, 3, 2) coordinates."""
    c = np.asarray(coords, dtype=float)
    x, y = c[:, :, 0], c[:, :, 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    g = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * (b[:, 0] * g[:, 1] - b[:, 1] * g[:, 0])
    if np.any(area <= 0):
        raise SpectralError("degenerate or inverted triangle")
    Ke = (b[:, :, None] * b[:, None, :] + g[:, :, None] * g[:, None, :]) / (4 * area)[:, None, None]
    Me = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12)[:, None, None]
    return Ke, Me, area


def _scatter(rows, cols, vals, n):
    A = sparse.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return A


@dataclass(frozen=True, eq=False)
class SpectralAssembly:
    mesh: Mesh
    bc: BoundaryConditionMap
    K_full: sparse.csr_matrix
    M_full: sparse.csr_matrix
    B_full: dict                 # tag -> unweighted boundary mass
    free: np.ndarray             # global nodes kept (non-Dirichlet)
    K: sparse.csr_matrix = field(repr=False)
    M: sparse.csr_matrix = field(repr=False)
    B: sparse.csr_matrix = field(repr=False)        # weighted parametric boundary mass
    B_class: dict = field(repr=False)               # tag -> boundary mass on free nodes
    param_dofs: np.ndarray = field(repr=False)      # free-dof indices on parametric classes

    @property
    def n_dofs(self) -> int:
        return len(self.free)

    def active_dofs(self) -> np.ndarray:
        """Parametric dofs carrying positive weighted boundary mass."""
        d = self.B.diagonal()[self.param_dofs]
        return self.param_dofs[d > 0]

    def has_dirichlet(self) -> bool:
        return len(self.free) < self.mesh.n_nodes


def assemble(mesh: Mesh, bc) -> SpectralAssembly:
    bc = bc if isinstance(bc, BoundaryConditionMap) else BoundaryConditionMap(bc)
    missing = bc.covers(mesh.classes())
    if missing:
        raise SpectralError(f"boundary classes without a condition: {missing}")
    n = mesh.n_nodes
    Ke, Me, _ = element_matrices(mesh.tri_coords)
    t = mesh.triangles
    rows = np.repeat(t[:, :, None], 3, axis=2)
    cols = np.repeat(t[:, None, :], 3, axis=1)
    K = _scatter(rows, cols, Ke, n)
    M = _scatter(rows, cols, Me, n)

    edge_block = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6
    B_full = {}
    tags = np.array(mesh.bedge_tags, dtype=object)
    for tag in mesh.classes():
        sel = np.flatnonzero(tags == tag)
        e = mesh.bedges[sel]
        vals = mesh.bedge_lengths[sel][:, None, None] * edge_block[None]
        r = np.repeat(e[:, :, None], 2, axis=2)
        c = np.repeat(e[:, None, :], 2, axis=1)
        B_full[tag] = _scatter(r, c, vals, n)

    dir_nodes = set()
    for tag in mesh.classes():
        if bc[tag].kind == "dirichlet":
            dir_nodes.update(mesh.class_nodes(tag).tolist())
    free = np.setdiff1d(np.arange(n), np.fromiter(dir_nodes, dtype=np.int64, count=len(dir_nodes)))
    if len(free) == 0:
        raise SpectralError("every node is constrained by Dirichlet conditions")
    P = sparse.identity(n, format="csr")[free]
    restrict = lambda A: (P @ A @ P.T).tocsr()
    Bc = {tag: restrict(A) for tag, A in B_full.items()}
    Bw = sparse.csr_matrix((len(free), len(free)))
    pnodes = set()
    for tag, A in Bc.items():
        c = bc[tag]
        if c.parametric:
            Bw = Bw + c.weight * A
            pnodes.update(mesh.class_nodes(tag).tolist())
    pos = np.full(n, -1, dtype=np.int64)
    pos[free] = np.arange(len(free))
    pd = np.array(sorted(pos[list(pnodes)][pos[list(pnodes)] >= 0]), dtype=np.int64) if pnodes else np.zeros(0, np.int64)
    return SpectralAssembly(mesh, bc, K, M, B_full, free, restrict(K), restrict(M), Bw.tocsr(), Bc, pd)


# -- spectra ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    problem: str
    eigenvalues: np.ndarray
    alpha: float | None = None
    sigma: float | None = None
    refinement: int | None = None
    bc: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)

    def to_csv(self) -> str:
        return spectra_to_csv([self])


def _fmt(x) -> str:
    return "" if x is None else f"{x:.17g}"


def spectra_to_csv(spectra) -> str:
    out = ["index,eigenvalue,problem,alpha,sigma,refinement"]
    for s in spectra:
        for i, lam in enumerate(s.eigenvalues):
            out.append(f"{i},{lam:.17g},{s.problem},{_fmt(s.alpha)},{_fmt(s.sigma)},"
                       f"{'' if s.refinement is None else s.refinement}")
    return "\n".join(out) + "\n"


def _lu_symmetric(A):
    return splu(sparse.csc_matrix(A), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                options=dict(SymmetricMode=True))


def count_below(A, M, s: float) -> int:
    """Number of eigenvalues of the pencil (A, M) below s (Sylvester inertia of A - sM)."""
    S = sparse.csc_matrix(A - s * M)
    if S.shape[0] <= DENSE_LIMIT:
        return int((np.linalg.eigvalsh(S.toarray()) < 0).sum())
    lu = _lu_symmetric(S)
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise SpectralError("symmetric factorization pivoted off the diagonal; inertia unavailable")
    return int((lu.U.diagonal() < 0).sum())


def _lower_shift(A, M) -> float:
    s = -1.0
    for _ in range(200):
        if count_below(A, M, s) == 0:
            return s
        s *= 2.0
    raise SpectralError("could not find a shift below the spectrum")


def pencil_smallest(A, M, k: int, seed: int = 0):
    """k smallest eigenpairs of the symmetric pencil A u = lam M u (M positive definite).

    Small problems are solved densely; larger ones by shift-invert Lanczos from
    a shift proven (by inertia) to lie below the spectrum, and the result is
    confirmed by inertia counts.
    """
    n = A.shape[0]
    if k < 1:
        raise SpectralError("k must be >= 1")
    if k > n:
        raise SpectralError(f"k = {k} exceeds the {n} available degrees of freedom")
    if n <= DENSE_LIMIT or k > n // 3:
        w, V = sla.eigh(_dense(A), _dense(M))
        return w[:k], V[:, :k], {"solver": "dense", "residual": _residual(A, M, w[:k], V[:, :k])}
    s = _lower_shift(A, M)
    v0 = np.random.default_rng(seed).standard_normal(n)
    w, V = eigsh(sparse.csc_matrix(A), k=k, M=sparse.csc_matrix(M), sigma=s, which="LM", v0=v0, tol=0)
    order = np.argsort(w, kind="stable")
    w, V = w[order], V[:, order]
    scale = max(1.0, abs(w[-1]))
    mid = w[-1] - 1e-7 * scale
    if count_below(A, M, mid) != int((w < mid).sum()) or count_below(A, M, w[-1] + 1e-7 * scale) < k:
        raise SpectralError("shift-invert Lanczos missed eigenvalues (inertia check failed)")
    res = _residual(A, M, w, V)
    if res > 1e-6:
        raise SpectralError(f"eigensolver did not converge (residual {res:.3g})")
    return w, V, {"solver": "shift-invert", "shift": s, "residual": res}


def _dense(A):
    return A.toarray() if sparse.issparse(A) else np.asarray(A)


def _residual(A, M, w, V) -> float:
    R = A @ V - (M @ V) * w
    nrm = max(abs(sparse.linalg.norm(A, 1)) if sparse.issparse(A) else np.abs(A).sum(0).max(), 1.0)
    return float(np.abs(R).max() / nrm)


def dirichlet_spectrum(a: SpectralAssembly, k: int) -> Spectrum:
    """Dirichlet conditions on the whole boundary."""
    interior = np.setdiff1d(np.arange(a.mesh.n_nodes), np.unique(a.mesh.bedges))
    K = a.K_full[interior][:, interior]
    M = a.M_full[interior][:, interior]
    w, _, meta = pencil_smallest(K, M, k)
    return Spectrum("dirichlet", w, refinement=a.mesh.refinement, bc="all=dirichlet", meta=meta)


def neumann_spectrum(a: SpectralAssembly, k: int) -> Spectrum:
    """Natural conditions on every non-Dirichlet class of the assembly's map."""
    w, _, meta = pencil_smallest(a.K, a.M, k)
    return Spectrum("neumann", w, refinement=a.mesh.refinement, bc=a.bc.describe(), meta=meta)


def robin_spectrum(a: SpectralAssembly, sigma: float, k: int, return_vectors: bool = False):
    if sigma != 0 and len(a.param_dofs) == 0:
        raise SpectralError("no Robin or Steklov class to carry sigma")
    w, V, meta = pencil_smallest(a.K - sigma * a.B, a.M, k)
    s = Spectrum("robin", w, sigma=float(sigma), refinement=a.mesh.refinement, bc=a.bc.describe(), meta=meta)
    return (s, V) if return_vectors else s


# -- Dirichlet-to-Neumann --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SchurData:
    S: np.ndarray
    bdofs: np.ndarray        # free-dof indices kept
    idofs: np.ndarray        # free-dof indices eliminated
    extension: np.ndarray    # -A_ii^-1 A_ib (dense)
    min_pivot: float
    margin: float


def _schur(A, keep, elim, alpha_msg=""):
    A = sparse.csr_matrix(A)
    Abb = A[keep][:, keep].toarray()
    if len(elim) == 0:
        return Abb, np.zeros((0, len(keep))), math.inf, 0.0
    Aii = sparse.csc_matrix(A[elim][:, elim])
    Aib = A[elim][:, keep].toarray()
    nrm = float(sparse.linalg.norm(Aii, np.inf))
    lu = splu(Aii, permc_spec="COLAMD")
    piv = float(np.abs(lu.U.diagonal()).min())
    margin = PIVOT_MARGIN * max(nrm, 1e-300)
    if piv < margin:
        raise SpectralError(f"alpha too close to the interior Dirichlet spectrum{alpha_msg} "
                            f"(smallest pivot {piv:.3g} < margin {margin:.3g})")
    X = -lu.solve(Aib)
    S = Abb + A[keep][:, elim] @ X
    return S, X, piv, margin


def dtn_matrix(a: SpectralAssembly, alpha: float, full: bool = False):
    """Schur complement of K - alpha M onto the parametric boundary dofs."""
    bd = a.param_dofs
    if len(bd) == 0:
        raise SpectralError("no Steklov or Robin boundary class")
    elim = np.setdiff1d(np.arange(a.n_dofs), bd)
    S, X, piv, margin = _schur(a.K - alpha * a.M, bd, elim, f" at alpha={alpha:g}")
    S = 0.5 * (S + S.T)
    data = SchurData(S, bd, elim, X, piv, margin)
    return data if full else S


def dtn_derivative(a: SpectralAssembly, alpha: float) -> np.ndarray:
    """dS/dalpha = -E^t M E, E the discrete (K - alpha M)-harmonic extension."""
    d = dtn_matrix(a, alpha, full=True)
    n = a.n_dofs
    E = np.zeros((n, len(d.bdofs)))
    E[d.bdofs, np.arange(len(d.bdofs))] = 1.0
    E[d.idofs] = d.extension
    return -(E.T @ (a.M @ E))


def steklov_spectrum(a: SpectralAssembly, alpha: float, k: int, return_vectors: bool = False):
    """Smallest k eigenvalues sigma of S(alpha) x = sigma B x on the dofs where rho > 0.

    Parametric dofs with zero weight are removed by a second Schur complement.
    With ``return_vectors`` the eigenvectors are extended to all free dofs.
    """
    d = dtn_matrix(a, alpha, full=True)
    B = a.B[d.bdofs][:, d.bdofs].toarray()
    wdiag = np.diag(B)
    if not np.any(wdiag > 0):
        raise SpectralError("density vanishes on the whole boundary")
    act = np.flatnonzero(wdiag > 0)
    zero = np.flatnonzero(wdiag <= 0)
    if len(zero):
        S2, X2, piv2, _ = _schur(d.S, act, zero, f" at alpha={alpha:g}")
    else:
        S2, X2, piv2 = d.S, np.zeros((0, len(act))), math.inf
    S2 = 0.5 * (S2 + S2.T)
    Bact = B[np.ix_(act, act)]
    if k > len(act):
        raise SpectralError(f"k = {k} exceeds the {len(act)} active boundary dofs")
    w, V = sla.eigh(S2, Bact)
    w, V = w[:k], V[:, :k]
    meta = {"solver": "dense-schur", "boundary_dofs": int(len(act)),
            "min_pivot": d.min_pivot, "pivot_margin": d.margin}
    s = Spectrum("steklov", w, alpha=float(alpha), refinement=a.mesh.refinement,
                 bc=a.bc.describe(), meta=meta)
    if not return_vectors:
        return s
    xb = np.zeros((len(d.bdofs), k))
    xb[act] = V
    if len(zero):
        xb[zero] = X2 @ V
    U = np.zeros((a.n_dofs, k))
    U[d.bdofs] = xb
    U[d.idofs] = d.extension @ xb
    return s, U


def rayleigh_quotient(a: SpectralAssembly, u, alpha: float) -> float:
    u = np.asarray(u, dtype=float)
    den = float(u @ (a.B @ u))
    if not den > 0:
        raise SpectralError("Rayleigh quotient denominator vanishes")
    return float(u @ (a.K @ u) - alpha * (u @ (a.M @ u))) / den


def check_alpha(a: SpectralAssembly, alpha: float) -> dict:
    """Pivot-margin report for a frequency; raises SpectralError when invalid."""
    d = dtn_matrix(a, alpha, full=True)
    return {"alpha": float(alpha), "min_pivot": d.min_pivot, "margin": d.margin}


# -- export ----------------------------------------------------------------------------------

def dumps_triplets(A) -> str:
    C = sparse.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    return "".join(f"{C.row[i]} {C.col[i]} {C.data[i]:.17g}\n" for i in order)
