import numpy as np
import pytest

from dilationlab import operator_model as om
from dilationlab.discretize import Discretization
from dilationlab.semigroup import decay_rate, evolve, gaussian_initial
from dilationlab.spectral_analysis import dilation_for, spectrum

HO = om.OperatorSpec(0.0, 2.0)


def _mode(n, k):
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


@pytest.fixture(scope="module")
def gamma50_runs():
    spec = om.OperatorSpec(50.0, 2.0)
    disc = Discretization.hermite(160)
    return evolve(spec, disc, t_end=4.0, dt=1e-3), evolve(spec, disc, t_end=4.0, dt=5e-4)


def test_ground_mode_decay():
    run = evolve(HO, Discretization.hermite(32), _mode(32, 0), t_end=2.0, dt=1e-3)
    assert np.abs(run.norms - np.exp(-run.t_grid)).max() <= 1e-4
    assert decay_rate(run) == pytest.approx(1.0, rel=1e-2)
    assert run.contractivity_violations == 0
    assert np.all(np.diff(run.t_grid) > 0)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_mode_k_decay(k):
    run = evolve(HO, Discretization.hermite(32), _mode(32, k), t_end=1.0, dt=1e-3)
    # the midpoint rule's rate for eigenvalue lam is lam (1 + (lam dt)^2 / 12 + ...)
    assert decay_rate(run) == pytest.approx(2 * k + 1, rel=1e-4)


def test_default_initial_is_normalized_gaussian():
    v = gaussian_initial(Discretization.hermite(10))
    assert np.linalg.norm(v) == 1.0 and v[0] == 1.0
    disc = Discretization.fd(199, 8.0)
    g = gaussian_initial(disc)
    assert np.linalg.norm(g) == pytest.approx(1.0)
    run = evolve(HO, disc, t_end=1.0, dt=1e-3)
    assert decay_rate(run) == pytest.approx(1.0, rel=1e-2)


def test_eig_fast_path_matches_midpoint():
    disc = Discretization.hermite(100)
    spec = om.OperatorSpec(20.0, 2.0)
    a = evolve(spec, disc, t_end=2.0, dt=1e-3)
    b = evolve(spec, disc, t_end=2.0, dt=1e-3, method="eig")
    assert decay_rate(a) == pytest.approx(decay_rate(b), rel=1e-4)
    np.testing.assert_allclose(a.norms, b.norms, rtol=1e-3)


def test_gamma50_rate_matches_abscissa(gamma50_runs):
    run, _ = gamma50_runs
    assert run.contractivity_violations == 0
    assert np.all(run.norms > 0)
    s = spectrum(om.OperatorSpec(50.0, 2.0, dilation_for(50.0, 2.0)), Discretization.hermite(200), 6)
    rate = decay_rate(run)
    assert abs(rate - s.abscissa) <= 0.05 * s.abscissa


def test_gamma50_dt_refinement(gamma50_runs):
    coarse, fine = gamma50_runs
    r1, r2 = decay_rate(coarse), decay_rate(fine)
    assert abs(r1 - r2) <= 5e-3 * r2


def test_rate_increases_with_gamma(gamma50_runs):
    run200 = evolve(om.OperatorSpec(200.0, 2.0), Discretization.hermite(160), t_end=3.0, dt=5e-4)
    assert decay_rate(run200) > decay_rate(gamma50_runs[0])


def test_validation():
    disc = Discretization.hermite(8)
    with pytest.raises(ValueError):
        evolve(om.OperatorSpec(1.0, 2.0, 0.1j), disc)
    with pytest.raises(ValueError):
        evolve(HO, disc, dt=0.0)
    with pytest.raises(ValueError):
        evolve(HO, disc, np.ones(5))
    with pytest.raises(ValueError):
        evolve(HO, disc, method="rk4")
    run = evolve(HO, disc, t_end=0.1, dt=1e-2)
    with pytest.raises(ValueError):
        decay_rate(run, (0.0, 0.05))        # fewer than 10 samples
    with pytest.raises(ValueError):
        decay_rate(run, (0.05, 0.5))        # outside the run
    deep = evolve(om.OperatorSpec(0.0, 2.0), Discretization.hermite(8), _mode(8, 7), t_end=60.0, dt=0.05)
    with pytest.raises(ValueError):
        decay_rate(deep)                    # norms underflow
