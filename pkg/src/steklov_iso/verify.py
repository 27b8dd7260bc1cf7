"""Verification pipelines: spectrum comparison, transplantation, quotient pairs,
isospectral densities and nonisometry evidence."""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from . import spectral as sp
from .scenes import single_tile
from .tiling import (GluedDomain, Mesh, boundary_components, combinatorial_diameter,
                     find_domain_maps, map_between, mesh, quotient_by_involution)

EXACT_TOL = 1e-12
EIG_TOL = 1e-8
ORACLE_TOL = 1e-2


class VerificationError(ValueError):
    pass


@dataclass
class ComparisonReport:
    pair: tuple
    problem: str
    points: list                 # one dict per parameter point
    tol: float
    passed: bool
    meta: dict = field(default_factory=dict)

    @property
    def max_discrepancy(self) -> float:
        return max((p["discrepancy"] for p in self.points), default=0.0)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self) -> str:
        return dumps_json(self.to_dict())


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


_FLOAT = re.compile(r'"@f:([^"]*)"')


def dumps_json(obj) -> str:
    """JSON with sorted keys and every float written with 17 significant digits."""
    def mark(x):
        if isinstance(x, dict):
            return {k: mark(v) for k, v in x.items()}
        if isinstance(x, list):
            return [mark(v) for v in x]
        if isinstance(x, float):
            return "@f:" + (f"{x:.17g}" if np.isfinite(x) else json.dumps(x))
        return x
    text = json.dumps(mark(_jsonable(obj)), indent=2, sort_keys=True)
    return _FLOAT.sub(lambda m: m.group(1), text) + "\n"


def relative_discrepancy(a, b) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)


def compare_spectra(s1: sp.Spectrum, s2: sp.Spectrum, tol: float = EIG_TOL,
                    pair=("1", "2")) -> ComparisonReport:
    if s1.problem != s2.problem or len(s1) != len(s2) or s1.alpha != s2.alpha or s1.sigma != s2.sigma:
        raise VerificationError("spectra differ in problem kind, length or parameters")
    d = relative_discrepancy(s1.eigenvalues, s2.eigenvalues)
    pt = _point(s1, s2, d)
    return ComparisonReport(tuple(pair), s1.problem, [pt], tol, bool(pt["discrepancy"] <= tol),
                            {"refinement": s1.refinement})


def _point(s1, s2, d):
    return {"alpha": s1.alpha, "sigma": s1.sigma, "k": len(s1), "discrepancy": float(d.max()),
            "eigenvalues_1": s1.eigenvalues, "eigenvalues_2": s2.eigenvalues,
            "solver_1": s1.meta, "solver_2": s2.meta}


def merge_reports(reports, pair=None, problem=None) -> ComparisonReport:
    pts = [p for r in reports for p in r.points]
    tol = min(r.tol for r in reports)
    return ComparisonReport(pair or reports[0].pair, problem or "/".join(sorted({r.problem for r in reports})),
                            pts, tol, all(p["discrepancy"] <= tol for p in pts), dict(reports[0].meta))


def compare_assemblies(a1, a2, problem: str, params, k: int, tol: float = EIG_TOL,
                       pair=("1", "2")) -> ComparisonReport:
    """Compare two assemblies over a parameter list (alphas for steklov, sigmas for robin)."""
    reps = []
    for p in params:
        s1, s2 = solve(a1, problem, p, k), solve(a2, problem, p, k)
        reps.append(compare_spectra(s1, s2, tol, pair))
    return merge_reports(reps, tuple(pair), problem)


def solve(a, problem: str, param, k: int) -> sp.Spectrum:
    if problem == "steklov":
        return sp.steklov_spectrum(a, float(param), k)
    if problem == "robin":
        return sp.robin_spectrum(a, float(param), k)
    if problem == "neumann":
        return sp.neumann_spectrum(a, k)
    if problem == "dirichlet":
        return sp.dirichlet_spectrum(a, k)
    raise VerificationError(f"unknown problem {problem!r}")


# -- transplantation ---------------------------------------------------------------------

def transplantation_operator(T, mesh1: Mesh, mesh2: Mesh, free1=None, free2=None) -> sparse.csr_matrix:
    """Tile-wise operator from functions on mesh2 to functions on mesh1.

    (Tdof u)(tile i, node p) = sum_j T[i, j] u(tile j, node p).  Rows and
    columns are the free dofs (all nodes by default); Dirichlet columns are
    dropped since those values vanish.  Every mesh1 node reached from several
    tiles must receive the same row, otherwise the tile identification would
    need a symmetry that was not declared and an error is raised.
    """
    T = np.asarray(T, dtype=float)
    nt1, nloc = mesh1.local.shape
    nt2 = mesh2.local.shape[0]
    if T.shape != (nt1, nt2) or mesh2.local.shape[1] != nloc:
        raise VerificationError("transplantation matrix does not fit the meshes")
    free1 = np.arange(mesh1.n_nodes) if free1 is None else np.asarray(free1)
    free2 = np.arange(mesh2.n_nodes) if free2 is None else np.asarray(free2)
    pos1 = np.full(mesh1.n_nodes, -1)
    pos1[free1] = np.arange(len(free1))
    pos2 = np.full(mesh2.n_nodes, -1)
    pos2[free2] = np.arange(len(free2))
    rows = {}
    for i in range(nt1):
        for p in range(nloc):
            r = pos1[mesh1.local[i, p]]
            if r < 0:
                continue
            entry = {}
            for j in range(nt2):
                if T[i, j] == 0:
                    continue
                c = pos2[mesh2.local[j, p]]
                if c >= 0:
                    entry[c] = entry.get(c, 0.0) + T[i, j]
            entry = {c: v for c, v in entry.items() if v != 0.0}
            old = rows.get(r)
            if old is None:
                rows[r] = entry
            elif set(old) != set(entry) or any(abs(old[c] - entry[c]) > EXACT_TOL for c in old):
                raise VerificationError("tile-wise transplantation is inconsistent on a shared node")
    ri, ci, vals = [], [], []
    for r in sorted(rows):
        for c in sorted(rows[r]):
            ri.append(r)
            ci.append(c)
            vals.append(rows[r][c])
    return sparse.csr_matrix((vals, (ri, ci)), shape=(len(free1), len(free2)))


def load_transplantation(T, mesh1: Mesh, mesh2: Mesh, free1=None, free2=None) -> sparse.csr_matrix:
    """Tile-wise transplantation of assembled load vectors (mesh2 -> mesh1).

    An assembled load at a node shared by several tiles of mesh2 is split
    evenly among its copies, each copy is moved tile-wise by T and the pieces
    are summed on mesh1.  With E the node-to-tile-copy gather matrix and D the
    node multiplicities this is E1^t (T kron I) E2 D2^-1.  The discrete
    forms then satisfy X1 Tdof = Tload X2; when every reference node has the
    same multiplicity in both meshes, Tload equals Tdof.
    """
    T = np.asarray(T, dtype=float)
    nt1, nloc = mesh1.local.shape
    nt2 = mesh2.local.shape[0]
    if T.shape != (nt1, nt2) or mesh2.local.shape[1] != nloc:
        raise VerificationError("transplantation matrix does not fit the meshes")
    mult2 = np.bincount(mesh2.local.ravel(), minlength=mesh2.n_nodes)
    r, c, v = [], [], []
    for i in range(nt1):
        for j in range(nt2):
            if T[i, j] != 0:
                r.append(mesh1.local[i])
                c.append(mesh2.local[j])
                v.append(T[i, j] / mult2[mesh2.local[j]])
    Y = sparse.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))),
                          shape=(mesh1.n_nodes, mesh2.n_nodes))
    free1 = np.arange(mesh1.n_nodes) if free1 is None else np.asarray(free1)
    free2 = np.arange(mesh2.n_nodes) if free2 is None else np.asarray(free2)
    return Y[free1][:, free2].tocsr()


def _inf_norm(A) -> float:
    return float(abs(A).sum(axis=1).max()) if A.shape[0] else 0.0


def _rel_residual(R, scale) -> float:
    return _inf_norm(R) / scale if scale > 0 else _inf_norm(R)


def check_intertwining(Tdof, a1: sp.SpectralAssembly, a2: sp.SpectralAssembly, Tload=None,
                       tol: float = EXACT_TOL) -> dict:
    """Relative residuals ||X1 Tdof - Tload X2|| for X = K, M and the parametric B.

    ``Tload`` defaults to ``Tdof`` (the plain commutation relation).  Class
    masses of the individual tags are reported too but only enter the verdict
    through B, since Neumann and Dirichlet tags need not correspond tile-wise.
    """
    if Tdof.shape != (a1.n_dofs, a2.n_dofs):
        raise VerificationError("operator shape does not match the assemblies")
    Y = Tdof if Tload is None else Tload
    if Y.shape != Tdof.shape:
        raise VerificationError("load operator shape does not match")
    nT = max(_inf_norm(Tdof), _inf_norm(Y))
    out = {}
    for name, X1, X2 in (("K", a1.K, a2.K), ("M", a1.M, a2.M), ("B", a1.B, a2.B)):
        out[name] = _rel_residual(X1 @ Tdof - Y @ X2, nT * max(_inf_norm(X1), _inf_norm(X2)))
    classes = {}
    for tag in sorted(set(a1.B_class) & set(a2.B_class)):
        X1, X2 = a1.B_class[tag], a2.B_class[tag]
        classes[tag] = _rel_residual(X1 @ Tdof - Y @ X2, nT * max(_inf_norm(X1), _inf_norm(X2)))
    worst = max(out.values())
    load_equals_dof = Tload is None or _inf_norm(Tload - Tdof) <= tol * max(nT, 1.0)
    return {"residuals": out, "class_residuals": classes, "max_residual": worst, "tol": tol,
            "load_equals_dof": bool(load_equals_dof), "passed": bool(worst <= tol)}


def transplant_check(T, m1: Mesh, m2: Mesh, a1: sp.SpectralAssembly, a2: sp.SpectralAssembly,
                     tol: float = EXACT_TOL) -> dict:
    """Build both transplantation operators (m2 -> m1) and check the relations."""
    Td = transplantation_operator(T, m1, m2, a1.free, a2.free)
    Tl = load_transplantation(T, m1, m2, a1.free, a2.free)
    rep = check_intertwining(Td, a1, a2, Tl, tol)
    rep["shape"] = list(Td.shape)
    rep["invertible"], rep["min_pivot"] = operator_invertible(Td)
    rep["tile_matrix_orthogonality_defect"] = orthogonality_defect(T)
    return rep


def orthogonality_defect(T) -> float:
    T = np.asarray(T, dtype=float)
    return float(np.abs(T.T @ T - np.eye(T.shape[1])).max())


def operator_invertible(Tdof, rel: float = 1e-10):
    """(invertible?, smallest |pivot| / max |entry|) from a sparse LU factorization."""
    if Tdof.shape[0] != Tdof.shape[1]:
        return False, 0.0
    try:
        lu = splu(sparse.csc_matrix(Tdof))
    except RuntimeError:  # exactly singular
        return False, 0.0
    piv = float(np.abs(lu.U.diagonal()).min() / abs(Tdof).max())
    return bool(piv > rel), piv


# -- pipelines -----------------------------------------------------------------------------

def sloshing_pair_check(D1: GluedDomain, D2: GluedDomain, beta1, beta2, rho, alphas, k: int,
                        refinement: int = 2, tol: float = EIG_TOL) -> ComparisonReport:
    """Mixed Neumann-Steklov comparison of the two involution quotients.

    ``rho`` maps each boundary class of the parent surfaces to a density;
    mirror edges get density zero (Neumann).
    """
    Q1, Q2 = quotient_by_involution(D1, beta1), quotient_by_involution(D2, beta2)
    m1, m2 = mesh(Q1, refinement), mesh(Q2, refinement)
    bc = {t: sp.Steklov(float(r)) for t, r in rho.items()}
    bc["mirror"] = sp.Neumann()
    a1, a2 = sp.assemble(m1, bc), sp.assemble(m2, bc)
    rep = compare_assemblies(a1, a2, "steklov", alphas, k, tol, (Q1.name, Q2.name))
    rep.meta.update({"rho": dict(rho), "mirror_edges": [int(len(m.class_edges("mirror"))) for m in (m1, m2)]})
    return rep


def pulled_back_density(D1: GluedDomain, D2: GluedDomain, tau, rho) -> dict:
    """Class densities of tau^* rho on D1, read off the boundary sides tau matches."""
    phi, k = tau
    perm, _ = D1.tile.symmetry_side_map(k)
    out = {}
    for v, i, tag in D1.boundary_sides():
        img_tag = D2.tags[phi[v]][perm[i]]
        val = float(rho[img_tag])
        if out.setdefault(tag, val) != val:
            raise VerificationError(f"pulled-back density is not constant on class {tag!r}")
    return out


def density_pair_check(D1: GluedDomain, D2: GluedDomain, tau, rho, alphas, k: int,
                       refinement: int = 2, tol: float = EIG_TOL) -> ComparisonReport:
    """Compare Stek(M1, rho) with Stek(M1, tau^* rho) for a verified tau: M1 -> M2."""
    phi, kk = tuple(tau[0]), int(tau[1])
    if (phi, kk) not in find_domain_maps(D1, D2, match_tags=False, symmetries=[kk]):
        raise VerificationError("tau does not map the first domain onto the second")
    m1, m2 = mesh(D1, refinement), mesh(D2, refinement)
    map_between(D1, m1, D2, m2, phi, kk)     # mesh-level verification
    rho2 = pulled_back_density(D1, D2, (phi, kk), rho)
    gap = max(abs(rho[t] - rho2[t]) for t in rho2)
    a = sp.assemble(m1, {t: sp.Steklov(rho[t]) for t in m1.classes()})
    b = sp.assemble(m1, {t: sp.Steklov(rho2[t]) for t in m1.classes()})
    rep = compare_assemblies(a, b, "steklov", alphas, k, tol, (f"{D1.name}:rho", f"{D1.name}:tau*rho"))
    degenerate = gap == 0.0
    rep.meta.update({"rho": dict(rho), "tau_rho": rho2, "max_density_gap": gap, "degenerate": degenerate})
    if degenerate:
        rep.passed = False
    return rep


def random_density_control(D1: GluedDomain, alphas, k: int, refinement: int = 2, seed: int = 0,
                           tol: float = EIG_TOL) -> ComparisonReport:
    """Two unrelated random class densities on the same domain (expected to fail)."""
    rng = np.random.default_rng(seed)
    m = mesh(D1, refinement)
    tags = m.classes()
    r1 = {t: float(rng.uniform(0.5, 2.0)) for t in tags}
    r2 = {t: float(rng.uniform(0.5, 2.0)) for t in tags}
    a = sp.assemble(m, {t: sp.Steklov(r1[t]) for t in tags})
    b = sp.assemble(m, {t: sp.Steklov(r2[t]) for t in tags})
    rep = compare_assemblies(a, b, "steklov", alphas, k, tol, ("random-1", "random-2"))
    rep.meta.update({"rho_1": r1, "rho_2": r2, "seed": seed})
    return rep


def doubling_check(D: GluedDomain, beta, bc, alpha: float, k: int, refinement: int = 2,
                   tol: float = EIG_TOL) -> dict:
    """Surface Steklov spectrum vs the merged mirror-Neumann and mirror-Dirichlet quotient spectra."""
    Q = quotient_by_involution(D, beta)
    m, mq = mesh(D, refinement), mesh(Q, refinement)
    full = sp.steklov_spectrum(sp.assemble(m, bc), alpha, k).eigenvalues
    bn = dict(bc, mirror=sp.Neumann())
    bd = dict(bc, mirror=sp.Dirichlet())
    sn = sp.steklov_spectrum(sp.assemble(mq, bn), alpha, k).eigenvalues
    sd = sp.steklov_spectrum(sp.assemble(mq, bd), alpha, k).eigenvalues
    merged = np.sort(np.concatenate([sn, sd]), kind="stable")[:k]
    d = relative_discrepancy(full, merged)
    return {"alpha": alpha, "k": k, "surface": full, "mirror_neumann": sn, "mirror_dirichlet": sd,
            "discrepancy": float(d.max()), "tol": tol, "passed": bool(d.max() <= tol),
            "fixed_nodes": int(len(mq.fixed_nodes))}


def duality_check(a: sp.SpectralAssembly, alpha: float, n_pairs: int = 5, tol: float = 1e-7) -> dict:
    """For Steklov eigenpairs (alpha, sigma_j), alpha must appear in Robin(sigma_j)."""
    st = sp.steklov_spectrum(a, alpha, n_pairs)
    rows = []
    for sigma in st.eigenvalues:
        # alpha need not be among the lowest Robin eigenvalues; locate it by inertia
        below = sp.count_below(a.K - float(sigma) * a.B, a.M, alpha - 1e-6 * max(1.0, abs(alpha)))
        rb = sp.robin_spectrum(a, float(sigma), below + 2)
        gap = float(np.min(np.abs(rb.eigenvalues - alpha)) / max(1.0, abs(alpha)))
        rows.append({"sigma": float(sigma), "robin_index": int(below), "gap": gap})
    worst = max(r["gap"] for r in rows)
    return {"alpha": alpha, "pairs": rows, "max_gap": worst, "tol": tol, "passed": bool(worst <= tol)}


def nonisometry_evidence(m1: Mesh, m2: Mesh, D1: GluedDomain | None = None,
                         D2: GluedDomain | None = None) -> dict:
    if m1.refinement != m2.refinement:
        raise VerificationError("meshes must share the refinement level")
    out = {}
    for key, m in (("1", m1), ("2", m2)):
        comps = boundary_components(m)
        out[key] = {"name": m.name, "diameter": combinatorial_diameter(m), "nodes": m.n_nodes,
                    "boundary_components": len(comps), "component_lengths": [c["length"] for c in comps],
                    "boundary_length": m.boundary_length()}
    out["diameters_differ"] = out["1"]["diameter"] != out["2"]["diameter"]
    out["boundary_length_gap"] = abs(out["1"]["boundary_length"] - out["2"]["boundary_length"])
    if D1 is not None and D2 is not None:
        out["tile_isometries"] = len(find_domain_maps(D1, D2))
    return out


def disk_validation(refinements=(1, 2, 3), k: int = 7, tile="disk64"):
    """Steklov spectrum of the polygonal disk against 0, 1, 1, 2, 2, 3, 3, ..."""
    exact = np.array([0.0] + [float(j) for j in range(1, k) for _ in range(2)])[:k]
    d = single_tile(tile)
    levels = []
    for r in refinements:
        m = mesh(d, r)
        s = sp.steklov_spectrum(sp.assemble(m, {"rim": "steklov"}), 0.0, k)
        levels.append({"refinement": r, "nodes": m.n_nodes, "eigenvalues": s.eigenvalues,
                       "abs_error": float(np.abs(s.eigenvalues - exact).max())})
    diffs = [float(np.abs(levels[i + 1]["eigenvalues"] - levels[i]["eigenvalues"]).max())
             for i in range(len(levels) - 1)]
    orders = [float(np.log2(diffs[i] / diffs[i + 1])) for i in range(len(diffs) - 1)]
    err_orders = [float(np.log2(levels[i]["abs_error"] / levels[i + 1]["abs_error"]))
                  for i in range(len(levels) - 1)]
    return {"exact": exact, "levels": levels, "successive_differences": diffs,
            "observed_order": min(orders) if orders else None, "orders_vs_exact": err_orders,
            "finest_abs_error": levels[-1]["abs_error"]}
