import numpy as np
import pytest

from regenlasso import Dataset, Hyperparams, RngStream, empirical_bayes, fit_lasso
from regenlasso.config import load_config
from regenlasso.lasso import ConvergenceError, kkt_residual, lasso_objective, mcem_update, soft_threshold
from regenlasso.pipeline import prepare_data

from conftest import CONFIGS, make_dataset


def orthonormal_dataset(n=20, p=5, seed=0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(n, p)))
    y = Q @ rng.normal(scale=3.0, size=p) + 0.3 * rng.normal(size=n)
    return Dataset(Q, y, tuple(f"q{j}" for j in range(p)))


@pytest.mark.parametrize("lam", [0.1, 1.0, 2.5, 6.0])
def test_orthonormal_soft_threshold(lam):
    ds = orthonormal_dataset()
    b = ds.X.T @ ds.y
    expected = np.sign(b) * np.maximum(np.abs(b) - lam / 2, 0.0)
    fit = fit_lasso(ds, lam, tol=1e-12)
    assert np.max(np.abs(fit.beta_hat - expected)) < 1e-8


def test_lambda_zero_is_least_squares():
    ds = make_dataset(n=30, p=4, seed=1)
    fit = fit_lasso(ds, 0.0, tol=1e-13)
    ls = np.linalg.lstsq(ds.X, ds.y, rcond=None)[0]
    np.testing.assert_allclose(fit.beta_hat, ls, atol=1e-8)


def test_zero_solution_above_kkt_bound():
    ds = make_dataset(seed=2)
    bound = 2 * np.max(np.abs(ds.X.T @ ds.y))
    assert np.all(fit_lasso(ds, bound).beta_hat == 0)
    assert np.any(fit_lasso(ds, 0.9 * bound).beta_hat != 0)


@pytest.mark.parametrize("lam", [0.5, 5.0, 40.0])
def test_kkt_and_objective(lam):
    ds = make_dataset(n=50, p=6, seed=3)
    fit = fit_lasso(ds, lam, tol=1e-12)
    assert kkt_residual(ds, fit.beta_hat, lam) < 1e-8
    assert fit.objective <= lasso_objective(ds, np.zeros(ds.p), lam)
    assert fit.objective == pytest.approx(lasso_objective(ds, fit.beta_hat, lam))


def test_objective_non_increasing_each_sweep():
    ds = make_dataset(n=50, p=8, seed=4)
    fit = fit_lasso(ds, 3.0, tol=1e-12)
    diffs = np.diff(fit.objective_trace)
    assert np.all(diffs <= 1e-12 * abs(fit.objective_trace[0]))
    assert len(fit.objective_trace) == fit.iterations + 1


def test_permutation_invariance():
    ds = make_dataset(n=40, p=7, seed=5)
    base = fit_lasso(ds, 2.0, tol=1e-12).beta_hat
    rng = np.random.default_rng(0)
    for _ in range(5):
        order = rng.permutation(ds.p)
        np.testing.assert_allclose(fit_lasso(ds, 2.0, tol=1e-12, order=order).beta_hat, base, atol=1e-8)


def test_non_convergence_and_bad_lambda():
    ds = make_dataset(seed=6)
    with pytest.raises(ConvergenceError):
        fit_lasso(ds, 0.01, tol=1e-30, max_sweeps=3)
    with pytest.raises(ValueError):
        fit_lasso(ds, -1.0)


def test_soft_threshold_values():
    np.testing.assert_array_equal(soft_threshold(np.array([-3.0, -0.5, 0.0, 0.5, 3.0]), 1.0), [-2.0, 0.0, 0.0, 0.0, 2.0])


def test_mcem_update_arithmetic():
    hp = mcem_update(np.array([1.0, 3.0]), 10.0, 5)
    assert hp.lam == pytest.approx(1.0)
    assert hp.sigma2 == pytest.approx(2.0)


def test_mcem_update_divergence():
    with pytest.raises(ConvergenceError):
        mcem_update(np.array([1e-40, 1e-40]), 1.0, 1)
    with pytest.raises(ConvergenceError):
        mcem_update(np.array([1.0]), 1e-20, 10)


def test_empirical_bayes_requires_rng():
    with pytest.raises(ValueError):
        empirical_bayes(make_dataset(), Hyperparams(1.0, 1.0), rng=None)


def test_mcem_settles_on_synthetic_data():
    ds = make_dataset(n=100, p=3, seed=7)
    history = []
    hp = empirical_bayes(
        ds, Hyperparams(5.0, 4.0), gibbs_samples_per_iter=1500, iters=25, rng=RngStream(3), burn=100, history=history
    )
    lams = np.array([h.lam for h in history])
    # once within 1% of the estimate for 5 consecutive iterations, stays within a bounded band
    rel = np.abs(lams / hp.lam - 1)
    run = 0
    settled = None
    for i, r in enumerate(rel):
        run = run + 1 if r < 0.01 else 0
        if run == 5:
            settled = i
            break
    assert settled is not None
    assert np.max(rel[settled:]) < 0.05
    assert 0.5 < hp.sigma2 < 2.0


@pytest.mark.slow
def test_empirical_bayes_diabetes_near_reported_values():
    cfg = load_config(CONFIGS / "diabetes_eb.cfg")
    ds = prepare_data(cfg)
    r = np.linalg.lstsq(ds.X, ds.y, rcond=None)[0]
    resid = ds.y - ds.X @ r
    init = Hyperparams(cfg.eb_init_lambda, float(resid @ resid / (ds.n - ds.p)))
    hp = empirical_bayes(ds, init, gibbs_samples_per_iter=2000, iters=30, rng=RngStream(cfg.seed, 0))
    assert hp.lam == pytest.approx(0.00431, rel=0.1)
    assert hp.sigma == pytest.approx(53.5, rel=0.05)
