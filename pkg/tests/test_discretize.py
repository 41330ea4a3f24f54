import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from dilationlab import operator_model as om
from dilationlab.discretize import (PHI_MAX_SLOPE, Discretization, assemble_anharmonic,
                                    assemble_dilated, assemble_real_part, build_cutoffs,
                                    default_fd, gauss_hermite, hermite_functions, phi)
from dilationlab.linalg import eig_dense, match_distance


def test_discretization_validation():
    with pytest.raises(ValueError):
        Discretization.hermite(1)
    with pytest.raises(ValueError):
        Discretization.fd(10, 0.0)
    with pytest.raises(ValueError):
        Discretization.hermite(10, quad_order=19)
    assert Discretization.hermite(10).quad_order == 52
    d = Discretization.fd(99, 5.0)
    assert d.h == pytest.approx(0.1)
    assert d.refined().h == pytest.approx(0.05)
    np.testing.assert_allclose(d.refined().grid()[1::2], d.grid(), atol=1e-13)
    assert d.doubled_box().h == pytest.approx(d.h)
    with pytest.raises(ValueError):
        Discretization.hermite(10).grid()


def test_gauss_hermite_small_rules():
    x, w = gauss_hermite(1)
    np.testing.assert_allclose(x, [0.0], atol=1e-15)
    np.testing.assert_allclose(w, [math.sqrt(math.pi)], rtol=1e-14)
    x, w = gauss_hermite(2)
    np.testing.assert_allclose(np.sort(x), [-1 / math.sqrt(2), 1 / math.sqrt(2)], rtol=1e-14)
    np.testing.assert_allclose(w, [math.sqrt(math.pi) / 2] * 2, rtol=1e-14)
    with pytest.raises(ValueError):
        gauss_hermite(0)


def test_gauss_hermite_moments():
    x, w = gauss_hermite(20)
    assert np.sum(w * x ** 4) == pytest.approx(0.75 * math.sqrt(math.pi), abs=1e-13)
    assert np.sum(w) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("m", [5, 40, 100])
def test_gauss_hermite_vs_numpy(m):
    x, w = gauss_hermite(m)
    xr, wr = np.polynomial.hermite.hermgauss(m)
    order = np.argsort(x)
    np.testing.assert_allclose(x[order], xr, atol=1e-12)
    np.testing.assert_allclose(w[order], wr, rtol=1e-10, atol=1e-300)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.integers(0, 59))
def test_gauss_hermite_exact_degree(m, p):
    if p > 2 * m - 1:
        return
    x, w = gauss_hermite(m)
    exact = 0.0 if p % 2 else math.gamma((p + 1) / 2)
    scale = np.sum(np.abs(w * x ** p))
    assert abs(np.sum(w * x ** p) - exact) <= 1e-13 * scale + 1e-15


def test_hermite_functions_orthonormal():
    x, w = gauss_hermite(80)
    psi = hermite_functions(40, x)
    gram = (psi * (w * np.exp(x * x))) @ psi.T
    np.testing.assert_allclose(gram, np.eye(40), atol=1e-12)
    far = hermite_functions(600, np.array([40.0]))
    assert np.all(np.isfinite(far))


def test_harmonic_hermite_exactly_diagonal():
    a = assemble_dilated(om.OperatorSpec(0.0, 2.0), Discretization.hermite(64))
    np.testing.assert_array_equal(np.diag(a), 2 * np.arange(64) + 1)
    assert np.all(a[~np.eye(64, dtype=bool)] == 0)


def test_real_dilation_unitary_equivalence():
    a = assemble_dilated(om.OperatorSpec(0.0, 2.0, 0.3), Discretization.hermite(128))
    vals = np.sort(eig_dense(a).eigenvalues.real)[:20]
    np.testing.assert_allclose(vals, 2 * np.arange(20) + 1, atol=1e-8)


@pytest.mark.parametrize("kappa", [1.0, 2.0, 3.0, 1.5])
def test_hermite_parity_blocks(kappa):
    a = assemble_dilated(om.OperatorSpec(7.0, kappa, 0.2 + 0.1j), Discretization.hermite(40))
    j = np.arange(40)
    odd = (j[:, None] + j[None, :]) % 2 == 1
    assert np.abs(a[odd]).max() <= 1e-15 * np.abs(a).max()


@pytest.mark.parametrize("kappa", [1.0, 3.0, 1.5])
def test_nonsmooth_potential_quadrature_converges(kappa):
    spec = om.OperatorSpec(10.0, kappa)
    v1 = eig_dense(assemble_dilated(spec, Discretization.hermite(200))).eigenvalues
    v2 = eig_dense(assemble_dilated(spec, Discretization.hermite(300))).eigenvalues
    low = lambda v: v[np.argsort(v.real)][:4]
    assert match_distance(low(v1), low(v2), relative=True) < 1e-6


def test_fd_vs_hermite_cross_scheme():
    spec = om.OperatorSpec(5.0, 2.0)
    fd = eig_dense(assemble_dilated(spec, Discretization.fd(2000, 12.0))).eigenvalues
    he = eig_dense(assemble_dilated(spec, Discretization.hermite(300))).eigenvalues
    lo_fd = fd[np.argsort(fd.real)][:5]
    lo_he = he[np.argsort(he.real)][:5]
    # agreement to 1e-4 relative; the FD error is O(h^2) ~ 1e-5 |lambda|
    assert match_distance(lo_he, lo_fd, relative=True) < 1e-4


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_assembly_rejects_nonfinite():
    with pytest.raises(ValueError):
        assemble_dilated(om.OperatorSpec(float("inf"), 2.0), Discretization.hermite(8))


def test_real_part_stencil_and_small_theta():
    d = Discretization.fd(999, 10.0)
    spec = om.RealPartSpec(40.0, 2.0, 0.3)
    tr = assemble_real_part(spec, d)
    x = d.grid()
    np.testing.assert_allclose(tr.diag, 2 / d.h ** 2 + om.real_part_potential(x, spec), rtol=1e-14)
    np.testing.assert_allclose(tr.off, -1 / d.h ** 2)
    small = assemble_real_part(om.RealPartSpec(40.0, 2.0, 1e-10), d)
    assert small.eigenvalues(1)[0] == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(ValueError):
        assemble_real_part(spec, Discretization.hermite(10))
    with pytest.raises(ValueError):
        assemble_anharmonic(om.AnharmonicSpec(1.0, 2.0), Discretization.hermite(10))
    v = np.arange(d.n, dtype=float)
    np.testing.assert_allclose(tr.matvec(v), tr.to_dense() @ v)


def test_real_part_ground_state_localizes():
    spreads = []
    for g in (100.0, 1000.0, 10000.0):
        spec = om.RealPartSpec(g, 2.0, math.pi / 8)
        d = default_fd(2.0, spec.alpha)
        tr = assemble_real_part(spec, d)
        _, vec = scipy.linalg.eigh_tridiagonal(tr.diag, tr.off, select="i", select_range=(0, 0))
        p = vec[:, 0] ** 2
        spreads.append(float(np.sum(p * d.grid() ** 2) / p.sum()))
    assert spreads[0] > spreads[1] > spreads[2]


def test_fd_harmonic_eigenvalues():
    # The central-difference error for eigenvalue 2k+1 is -h^2 <x^4>_k / 12 to
    # leading order, with <x^4>_k = (6k^2 + 6k + 3)/4.  At n=4000, box=10 this
    # is 1.56e-6 for the ground state.
    d = Discretization.fd(4000, 10.0)
    vals = assemble_anharmonic(om.AnharmonicSpec(1.0, 2.0), d).eigenvalues(3)
    k = np.arange(3)
    predicted = 2 * k + 1 - d.h ** 2 * (6 * k * k + 6 * k + 3) / 48
    np.testing.assert_allclose(vals, predicted, atol=1e-9)
    np.testing.assert_allclose(vals, 2 * k + 1, atol=2.1e-5)
    assert abs(vals[0] - 1) < 1.6e-6


def test_fd_second_order_convergence():
    vals = [assemble_anharmonic(om.AnharmonicSpec(1.0, 4.0), Discretization.fd(n, 8.0)).eigenvalues(1)[0]
            for n in (399, 799, 1599, 3199)]
    d = np.diff(vals)
    ratios = d[:-1] / d[1:]
    np.testing.assert_allclose(ratios, 4.0, rtol=0.01)


def test_anharmonic_rescaling_kappa4():
    d = Discretization.fd(4000, 10.0)
    l1 = assemble_anharmonic(om.AnharmonicSpec(1.0, 4.0), d).eigenvalues(1)[0]
    l16 = assemble_anharmonic(om.AnharmonicSpec(16.0, 4.0), d).eigenvalues(1)[0]
    assert l16 / (l1 * 16 ** (1 / 3)) == pytest.approx(1.0, abs=1e-3)


def test_cutoff_examples():
    alpha, nu = 50.0, 1 / 6
    grid = np.linspace(-3, 3, 60001)
    cut = build_cutoffs(alpha, nu, grid)
    r = alpha ** -nu
    inner, outer = np.abs(grid) <= r, np.abs(grid) >= 2 * r
    assert np.all(cut.J[inner] == 1) and np.all(cut.Jt[inner] == 0)
    assert np.all(cut.J[outer] == 0) and np.all(cut.Jt[outer] == 1)
    np.testing.assert_allclose(cut.J ** 2 + cut.Jt ** 2, 1.0, atol=1e-15)
    assert np.abs(cut.dJ).max() <= PHI_MAX_SLOPE * alpha ** nu * (1 + 1e-12)
    assert np.abs(cut.dJ).max() == pytest.approx(PHI_MAX_SLOPE * alpha ** nu, rel=1e-6)
    # derivatives agree with finite differences of the sampled profiles
    h = grid[1] - grid[0]
    np.testing.assert_allclose(np.gradient(cut.J, h)[1:-1], cut.dJ[1:-1], atol=1e-3)
    mid = (np.abs(grid) > 1.05 * r) & (np.abs(grid) < 1.95 * r)
    np.testing.assert_allclose(np.gradient(cut.Jt, h)[mid], cut.dJt[mid], rtol=1e-3, atol=1e-3)
    with pytest.raises(ValueError):
        build_cutoffs(0.0, nu, grid)


@given(st.floats(-5, 5))
def test_phi_bounds(x):
    v = phi(x)
    assert 0 <= v <= 1
    if abs(x) <= 1:
        assert v == 1
    if abs(x) >= 2:
        assert v == 0
