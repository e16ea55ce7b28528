import warnings

import numpy as np
import pytest

from regenlasso import AlphaGrid, Hyperparams, RngStream, empirical_quantile_window, fit_lasso, grid_search_alpha
from regenlasso.tuning import PilotRun, default_alpha_grid, mean_regen_probability, run_pilot, write_profile_csv

from conftest import make_dataset


def pilot_from_tau(tau, beta=None):
    tau = np.asarray(tau, dtype=float)
    if tau.ndim == 1:
        tau = tau[:, None]
    beta = np.zeros_like(tau) if beta is None else np.asarray(beta, dtype=float)
    return PilotRun(beta, tau)


def test_quantile_window_type7():
    win = empirical_quantile_window(pilot_from_tau(np.arange(1.0, 101.0)), 0.10, np.zeros(1))
    assert win.c[0] == pytest.approx(10.9, abs=1e-12)
    assert win.d[0] == pytest.approx(90.1, abs=1e-12)
    assert win.alpha == 0.10


def test_quantile_window_limits():
    tau = np.random.default_rng(0).gamma(2.0, size=501)
    win = empirical_quantile_window(pilot_from_tau(tau), 0.5 - 1e-12, np.zeros(1))
    assert win.c[0] == pytest.approx(np.median(tau), abs=1e-9)
    assert win.d[0] == pytest.approx(np.median(tau), abs=1e-9)
    win = empirical_quantile_window(pilot_from_tau(np.full(20, 3.0)), 0.2, np.zeros(1))
    assert win.c[0] == win.d[0] == 3.0


def test_quantile_window_errors():
    pilot = pilot_from_tau(np.arange(1.0, 21.0))
    for bad in (0.0, 0.5, -0.1, 0.7):
        with pytest.raises(ValueError):
            empirical_quantile_window(pilot, bad, np.zeros(1))
    with pytest.raises(ValueError):
        empirical_quantile_window(pilot_from_tau(np.arange(1.0, 6.0)), 0.1, np.zeros(1))


@pytest.fixture(scope="module")
def pilot_setup():
    ds = make_dataset()
    hp = Hyperparams(2.0, 1.0)
    fit = fit_lasso(ds, hp.lam)
    return fit.beta_hat, run_pilot(ds, hp, fit.beta_hat, 2000, RngStream(4, 1))


def test_single_point_grid(pilot_setup):
    beta_hat, pilot = pilot_setup
    alpha, win, prof = grid_search_alpha(pilot, [0.07], beta_hat)
    assert alpha == 0.07
    assert prof.values.tolist() == [0.07]


def test_grid_search_deterministic_and_consistent(pilot_setup):
    beta_hat, pilot = pilot_setup
    a1, w1, p1 = grid_search_alpha(pilot, None, beta_hat)
    a2, w2, p2 = grid_search_alpha(pilot, None, beta_hat)
    assert a1 == a2
    np.testing.assert_array_equal(p1.mean_psi, p2.mean_psi)
    best = int(np.argmax(p1.mean_psi))
    assert p1.values[best] == a1
    assert mean_regen_probability(pilot, w1) == p1.mean_psi[best]
    assert np.all((p1.mean_psi >= 0) & (p1.mean_psi <= 1))


def test_profile_vanishes_at_extremes(pilot_setup):
    beta_hat, pilot = pilot_setup
    grid = np.geomspace(1e-4, 0.4999, 40)
    _, _, prof = grid_search_alpha(pilot, grid, beta_hat)
    top = prof.mean_psi.max()
    assert prof.mean_psi[0] < top and prof.mean_psi[-1] < top
    assert prof.mean_psi[-1] < 0.01 * top


def test_ties_go_to_smallest_alpha():
    # identical tau rows: every window contains every pair and psi == 1
    pilot = pilot_from_tau(np.ones(50))
    alpha, _, prof = grid_search_alpha(pilot, [0.3, 0.1, 0.2], np.zeros(1))
    assert np.all(prof.mean_psi == 1.0)
    assert alpha == 0.1


def test_all_zero_profile_warns():
    k = np.arange(100.0)
    tau = np.column_stack([k + 1, (k + 50) % 100 + 1])
    pilot = pilot_from_tau(tau)
    with pytest.warns(RuntimeWarning, match="zero"):
        grid_search_alpha(pilot, [0.3], np.zeros(2))


def test_alpha_grid_must_increase():
    with pytest.raises(ValueError):
        AlphaGrid(np.array([0.2, 0.1]), np.zeros(2))


def test_default_grid():
    g = default_alpha_grid()
    assert g.size == 30 and g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(0.3)


def test_profile_csv(tmp_path):
    path = tmp_path / "p.csv"
    write_profile_csv(AlphaGrid(np.array([0.01, 0.02]), np.array([0.5, 0.25])), path)
    assert path.read_text().splitlines() == [
        "alpha,mean_psi",
        "1.0000000000e-02,5.0000000000e-01",
        "2.0000000000e-02,2.5000000000e-01",
    ]
