import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from steklov_iso import scenes as sc
from steklov_iso import spectral as sp
from steklov_iso.tiling import mesh


@pytest.fixture(scope="module")
def square():
    return mesh(sc.single_tile("square", h=0.25), 3)


@pytest.fixture(scope="module")
def square_stek(square):
    return sp.assemble(square, {t: "steklov" for t in square.classes()})


def test_reference_element():
    Ke, Me, area = sp.element_matrices(np.array([[[0, 0], [1, 0], [0, 1]]], float))
    assert area[0] == 0.5
    assert np.allclose(Ke[0], [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], atol=1e-15)
    assert np.allclose(Me[0], np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24, atol=1e-15)
    with pytest.raises(sp.SpectralError):
        sp.element_matrices(np.array([[[0, 0], [0, 1], [1, 0]]], float))


def test_assembly_invariants(square_stek, square):
    a = square_stek
    one = np.ones(a.n_dofs)
    assert np.abs(a.K @ one).max() < 1e-12
    assert one @ (a.M @ one) == pytest.approx(1.0, rel=1e-13)
    assert one @ (a.B @ one) == pytest.approx(4.0, rel=1e-13)
    assert abs(a.K - a.K.T).max() < 1e-14


def test_condition_parsing():
    assert sp.parse_condition("steklov:0.5") == sp.Steklov(0.5)
    assert sp.parse_condition("robin") == sp.Robin(1.0)
    assert sp.parse_condition("neumann").kind == "neumann"
    with pytest.raises(ValueError):
        sp.parse_condition("wall")
    with pytest.raises(ValueError):
        sp.Steklov(-1.0)


def test_missing_condition(square):
    with pytest.raises(sp.SpectralError):
        sp.assemble(square, {"bottom": "steklov"})


def test_square_neumann_dirichlet(square):
    # exact: pi^2 (m^2 + n^2)
    pi2 = np.pi ** 2
    n = sp.neumann_spectrum(sp.assemble(square, {t: "neumann" for t in square.classes()}), 6).eigenvalues
    d = sp.dirichlet_spectrum(sp.assemble(square, {t: "dirichlet" for t in square.classes()}), 4).eigenvalues
    assert abs(n[0]) < 1e-10
    assert n[1:] == pytest.approx(pi2 * np.array([1, 1, 2, 4, 4]), rel=1e-2)
    assert d == pytest.approx(pi2 * np.array([2, 5, 5, 8]), rel=2e-2)


def test_robin_zero_is_neumann(square_stek):
    a = square_stek
    r = sp.robin_spectrum(a, 0.0, 8).eigenvalues
    n = sp.neumann_spectrum(a, 8).eigenvalues
    assert np.abs(r - n).max() < 1e-9


def test_sparse_path_matches_dense():
    m = mesh(sc.single_tile("square", h=0.1), 2)
    a = sp.assemble(m, {t: "robin" for t in m.classes()})
    assert a.n_dofs > sp.DENSE_LIMIT
    w, _, meta = sp.pencil_smallest(a.K - 0.7 * a.B, a.M, 10)
    ref = sla.eigh((a.K - 0.7 * a.B).toarray(), a.M.toarray(), eigvals_only=True)[:10]
    assert meta["solver"] != "dense"
    assert np.abs(w - ref).max() / max(1.0, np.abs(ref).max()) < 1e-9
    assert sp.count_below(a.K - 0.7 * a.B, a.M, float(ref[4] + 1e-6)) == 5


def test_steklov_basic(square_stek):
    s, U = sp.steklov_spectrum(square_stek, 0.0, 6, return_vectors=True)
    assert abs(s.eigenvalues[0]) < 1e-10
    assert np.all(np.diff(s.eigenvalues) >= -1e-12)
    for j in range(6):
        assert sp.rayleigh_quotient(square_stek, U[:, j], 0.0) == pytest.approx(s.eigenvalues[j], abs=1e-9)


def test_disk_oracle_coarse():
    m = mesh(sc.single_tile("disk64"), 1)
    s = sp.steklov_spectrum(sp.assemble(m, {"rim": "steklov"}), 0.0, 7).eigenvalues
    assert s == pytest.approx([0, 1, 1, 2, 2, 3, 3], abs=2e-2)


def test_duality(square_stek):
    a = square_stek
    alpha = 3.0
    st_ = sp.steklov_spectrum(a, alpha, 4).eigenvalues
    for sigma in st_:
        r = sp.robin_spectrum(a, float(sigma), 10).eigenvalues
        assert np.min(np.abs(r - alpha)) < 1e-7


def test_dtn_derivative_finite_difference(square_stek):
    a = square_stek
    h = 1e-4
    fd = (sp.dtn_matrix(a, 1.0 + h) - sp.dtn_matrix(a, 1.0 - h)) / (2 * h)
    D = sp.dtn_derivative(a, 1.0)
    assert np.abs(fd - D).max() < 1e-6 * max(1.0, np.abs(D).max())
    assert np.linalg.eigvalsh(D).max() < 1e-12


def test_alpha_on_dirichlet_eigenvalue(square, square_stek):
    # interior (boundary-clamped) spectrum of the same discretization
    lam = sp.dirichlet_spectrum(sp.assemble(square, {t: "dirichlet" for t in square.classes()}), 1).eigenvalues[0]
    with pytest.raises(sp.SpectralError):
        sp.check_alpha(square_stek, float(lam))
    info = sp.check_alpha(square_stek, float(lam) - 1.0)
    assert info["min_pivot"] > info["margin"]


def test_zero_density_reduction(square):
    # rho = 0 on one side behaves as a Neumann wall
    bc = {"bottom": "steklov", "right": "steklov:0", "top": "steklov", "left": "steklov"}
    bc2 = {"bottom": "steklov", "right": "neumann", "top": "steklov", "left": "steklov"}
    s1 = sp.steklov_spectrum(sp.assemble(square, bc), 0.5, 6).eigenvalues
    s2 = sp.steklov_spectrum(sp.assemble(square, bc2), 0.5, 6).eigenvalues
    assert np.abs(s1 - s2).max() < 1e-9


def test_csv_format(square_stek):
    s = sp.steklov_spectrum(square_stek, 0.0, 3)
    lines = sp.spectra_to_csv([s]).splitlines()
    assert lines[0] == "index,eigenvalue,problem,alpha,sigma,refinement"
    assert lines[1].startswith("0,") and lines[1].endswith(",steklov,0,,3")


@settings(max_examples=12, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.05, 2.0))
def test_robin_monotone_in_sigma(sigma, dsig):
    # min-max: the form |grad u|^2 - sigma |u|^2_bdry decreases with sigma
    a = _coarse_robin()
    lo = sp.robin_spectrum(a, sigma, 6).eigenvalues
    hi = sp.robin_spectrum(a, sigma + dsig, 6).eigenvalues
    assert np.all(hi <= lo + 1e-10)


_CACHE = {}


def _coarse_robin():
    if "a" not in _CACHE:
        m = mesh(sc.single_tile("square", h=0.25), 1)
        _CACHE["a"] = sp.assemble(m, {t: "robin" for t in m.classes()})
    return _CACHE["a"]
