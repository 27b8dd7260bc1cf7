"""Acceptance criteria 1-10.  Each test prints one PASS/FAIL line and records it
for the end-of-run summary (see conftest.py)."""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, REFINE
from steklov_iso import groups as grp
from steklov_iso import scenes as sc
from steklov_iso import spectral as sp
from steklov_iso import verify as vf
from steklov_iso.schreier import schreier_graph, symmetrized_adjacency_spectrum
from steklov_iso.tiling import mesh

K = 25


def record(n: int, ok: bool, detail: str):
    ok = bool(ok)
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_c01_gassmann_pair():
    t0 = time.perf_counter()
    G, H1, H2 = grp.gl3_f2()
    ac = grp.almost_conjugate(G, H1, H2)
    pc = grp.permutation_character_equal(G, H1, H2)
    conj = grp.are_conjugate_subgroups(G, H1, H2)
    dt = time.perf_counter() - t0
    ok = G.order == 168 and H1.index == H2.index == 7 and ac and pc and not conj and dt < 1.0
    record(1, ok, f"|G|={G.order} index={H1.index},{H2.index} almost_conjugate={ac} "
                  f"perm_char_equal={pc} conjugate={conj} runtime={dt:.3f}s")


def test_c02_graph_sunada():
    G, H1, H2 = grp.gl3_f2()
    S = G.generators[:2]
    g1, g2 = schreier_graph(G, H1, S), schreier_graph(G, H2, S)
    d = float(np.abs(symmetrized_adjacency_spectrum(g1) - symmetrized_adjacency_spectrum(g2)).max())
    record(2, g1.vertex_count == g2.vertex_count == 7 and d <= 1e-12,
           f"vertices={g1.vertex_count},{g2.vertex_count} max spectral difference={d:.2e}")


def test_c03_steklov_isospectral(buser_assemblies):
    a1, a2 = buser_assemblies
    t0 = time.perf_counter()
    margins = [sp.check_alpha(a, al) for a in (a1, a2) for al in (-2.0, 0.0, 3.0)]
    rep = vf.compare_assemblies(a1, a2, "steklov", [-2.0, 0.0, 3.0], K, vf.EIG_TOL, ("M1", "M2"))
    dt = time.perf_counter() - t0
    margins_ok = all(m["min_pivot"] > m["margin"] for m in margins)
    ok = rep.passed and margins_ok and a1.n_dofs <= 20000 and dt <= 300
    record(3, ok, f"dofs={a1.n_dofs} k={K} alpha=-2,0,3 max discrepancy={rep.max_discrepancy:.2e} "
                  f"pivot margins ok={margins_ok} runtime={dt:.1f}s")


def test_c04_robin_isospectral(buser_assemblies):
    a1, a2 = buser_assemblies
    rep = vf.compare_assemblies(a1, a2, "robin", [0.1, 1.0, 10.0], K, vf.EIG_TOL, ("M1", "M2"))
    dual = vf.duality_check(a1, 3.0, n_pairs=5, tol=1e-7)
    ok = rep.passed and dual["passed"] and len(dual["pairs"]) >= 5
    record(4, ok, f"sigma=0.1,1,10 max discrepancy={rep.max_discrepancy:.2e}; "
                  f"duality pairs={len(dual['pairs'])} max gap={dual['max_gap']:.2e}")


def test_c05_sloshing_pair(buser):
    b1, b2 = sc.diagonal_involutions(buser)
    rep = vf.sloshing_pair_check(buser.D1, buser.D2, b1, b2, {"arc": 1.0}, [0.0, 1.5], K, REFINE, vf.EIG_TOL)
    mirror = rep.meta["mirror_edges"]
    ok = rep.passed and min(mirror) > 0
    record(5, ok, f"alpha=0,1.5 k={K} max discrepancy={rep.max_discrepancy:.2e} mirror edges={mirror}")


def test_c06_two_triangle_pairs():
    bc = {"arc": "steklov", "neumann": "neumann", "dirichlet": "dirichlet"}
    parts, ok = [], True
    for which in ("M", "P"):
        src, dst, T = sc.two_triangle_pair(which)
        ms, md = mesh(src, REFINE), mesh(dst, REFINE)
        a_s, a_d = sp.assemble(ms, bc), sp.assemble(md, bc)
        k = 20
        rob = vf.compare_assemblies(a_s, a_d, "robin", [0.5, 2.0], k, vf.EIG_TOL)
        stk = vf.compare_assemblies(a_s, a_d, "steklov", [0.0], k, vf.EIG_TOL)
        tr = vf.transplant_check(T, md, ms, a_d, a_s, vf.EXACT_TOL)
        ok &= rob.passed and stk.passed and tr["passed"] and tr["invertible"]
        parts.append(f"{which}: robin {rob.max_discrepancy:.1e} steklov {stk.max_discrepancy:.1e} "
                     f"transplant {tr['max_residual']:.1e}")
    record(6, ok, "; ".join(parts))


def test_c07_fem_oracle():
    res = vf.disk_validation((1, 2, 3), 7)
    order, err = res["observed_order"], res["finest_abs_error"]
    ok = order >= 1.5 and err <= vf.ORACLE_TOL
    record(7, ok, f"observed order={order:.2f} finest abs error={err:.2e} "
                  f"nodes={[lev['nodes'] for lev in res['levels']]}")


def test_c08_density_pair():
    p = sc.density_pair()
    taus = sc.half_turn_maps(p)
    rho = dict(sc.SCENES["density"]["rho"])
    rep = vf.density_pair_check(p.D1, p.D2, taus[0], rho, [0.0, -1.0], K, REFINE, vf.EIG_TOL)
    ctrl = vf.random_density_control(p.D1, [0.0, -1.0], K, REFINE, seed=0)
    gap = rep.meta["max_density_gap"]
    ok = rep.passed and gap > 0.1 and not ctrl.passed
    record(8, ok, f"tau={taus[0]} max|rho - tau*rho|={gap:.2f} discrepancy={rep.max_discrepancy:.2e}; "
                  f"random control discrepancy={ctrl.max_discrepancy:.2e} (must fail)")


def test_c09_nonisometry(buser, buser_meshes):
    ev = vf.nonisometry_evidence(*buser_meshes, buser.D1, buser.D2)
    ok = ev["diameters_differ"] and ev["boundary_length_gap"] <= 1e-10
    record(9, ok, f"diameters={ev['1']['diameter']},{ev['2']['diameter']} "
                  f"boundary length gap={ev['boundary_length_gap']:.1e} tile isometries={ev['tile_isometries']}")


def test_c10_doubling(buser):
    beta = sc.diagonal_involutions(buser)[0]
    res = vf.doubling_check(buser.D1, beta, {"arc": sp.Steklov(1.0)}, 0.0, 20, REFINE, vf.EIG_TOL)
    record(10, res["passed"], f"k=20 max discrepancy={res['discrepancy']:.2e} fixed nodes={res['fixed_nodes']}")
