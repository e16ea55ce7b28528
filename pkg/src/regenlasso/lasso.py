"""Frequentist Lasso anchor and Monte Carlo EM for (lambda, sigma2)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import ChainState, Dataset, Hyperparams
from .samplers import gibbs_step

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class LassoFit:
    beta_hat: np.ndarray
    lam: float
    objective: float
    iterations: int
    objective_trace: tuple = field(default=(), repr=False)


def lasso_objective(ds: Dataset, beta, lam: float) -> float:
    """``|y - X beta|^2 + lam * |beta|_1`` (no 1/2 on the loss)."""
    r = ds.y - ds.X @ beta
    return float(r @ r + lam * np.sum(np.abs(beta)))


def soft_threshold(z, thresh):
    return np.sign(z) * np.maximum(np.abs(z) - thresh, 0.0)


def fit_lasso(
    ds: Dataset,
    lam: float,
    tol: float = 1e-10,
    max_sweeps: int = 100_000,
    order: Optional[Sequence[int]] = None,
) -> LassoFit:
    """Cyclic coordinate descent for ``argmin |y - X b|^2 + lam |b|_1``.

    The coordinate update is ``S(x_j' r_j, lam/2) / |x_j|^2`` where ``r_j`` is
    the partial residual. Stops when the largest coordinate change in a sweep
    is below ``tol``; ``order`` fixes the coordinate visiting order.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    X, y = ds.X, ds.y
    p = ds.p
    col_sq = np.sum(X * X, axis=0)
    if np.any(col_sq == 0):
        raise ValueError("fit_lasso requires nonzero columns")
    order = np.arange(p) if order is None else np.asarray(order)
    beta = np.zeros(p)
    resid = y.copy()
    half = 0.5 * lam
    trace = [lasso_objective(ds, beta, lam)]
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in order:
            xj = X[:, j]
            bj = beta[j]
            z = xj @ resid + col_sq[j] * bj
            new = soft_threshold(z, half) / col_sq[j]
            delta = new - bj
            if delta != 0.0:
                resid -= delta * xj
                beta[j] = new
                max_delta = max(max_delta, abs(delta))
        trace.append(lasso_objective(ds, beta, lam))
        if max_delta < tol:
            return LassoFit(beta, lam, trace[-1], sweep, tuple(trace))
    raise ConvergenceError(f"coordinate descent did not converge in {max_sweeps} sweeps")


def kkt_residual(ds: Dataset, beta, lam: float) -> float:
    """Largest subgradient-optimality violation.

    Stationarity reads ``2 x_j'(X b - y) + lam s_j = 0`` with ``s_j = sign(b_j)``
    for nonzero ``b_j`` and ``s_j`` in [-1, 1] otherwise.
    """
    beta = np.asarray(beta, dtype=float)
    g = 2.0 * ds.X.T @ (ds.X @ beta - ds.y)
    nz = beta != 0
    viol = np.where(nz, np.abs(g + lam * np.sign(beta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(np.max(viol))


# -- Monte Carlo EM ---------------------------------------------------------

LIMITS = (1e-10, 1e10)


def mcem_update(mean_inv_tau, mean_rss: float, n: int) -> Hyperparams:
    """M-step of the augmented model.

    Maximizing ``sum_j (2 log lam - lam^2 E[1/tau_j] / 2)`` gives
    ``lam^2 = 2p / sum_j E[1/tau_j]``; the Gaussian likelihood gives
    ``sigma2 = E|y - X beta|^2 / n``.
    """
    mean_inv_tau = np.asarray(mean_inv_tau, dtype=float)
    lam = float(np.sqrt(2.0 * mean_inv_tau.size / np.sum(mean_inv_tau)))
    sigma2 = float(mean_rss / n)
    for name, value in (("lambda", lam), ("sigma2", sigma2)):
        if not (LIMITS[0] <= value <= LIMITS[1]):
            raise ConvergenceError(f"MCEM diverged: {name}={value:g} left {LIMITS}")
    return Hyperparams(lam, sigma2)


def empirical_bayes(
    ds: Dataset,
    init: Hyperparams,
    gibbs_samples_per_iter: int = 2000,
    iters: int = 30,
    rng=None,
    burn: int = 200,
    average_last: int = 5,
    history: Optional[list] = None,
) -> Hyperparams:
    """Monte Carlo EM for the marginal-likelihood maximizer of (lambda, sigma2).

    Each iteration runs ``burn + gibbs_samples_per_iter`` Gibbs steps at the
    current hyperparameters (continuing from the previous state) and applies
    :func:`mcem_update` to the sample averages. The returned estimate averages
    lambda and sigma2 over the final ``average_last`` iterations. Per-iteration
    estimates are appended to ``history`` when given.
    """
    if rng is None:
        raise ValueError("empirical_bayes needs an explicit rng")
    hp = init
    state = ChainState(np.linalg.lstsq(ds.X, ds.y, rcond=None)[0], np.ones(ds.p))
    path = history if history is not None else []
    for it in range(iters):
        inv_tau = np.zeros(ds.p)
        rss = 0.0
        for k in range(burn + gibbs_samples_per_iter):
            state = gibbs_step(state, ds, hp, rng)
            if k >= burn:
                inv_tau += 1.0 / state.tau
                r = ds.y - ds.X @ state.beta
                rss += r @ r
        hp = mcem_update(inv_tau / gibbs_samples_per_iter, rss / gibbs_samples_per_iter, ds.n)
        path.append(hp)
        log.debug("MCEM iteration %d: lambda=%.6g sigma=%.6g", it + 1, hp.lam, hp.sigma)
    tail = path[-min(average_last, len(path)):]
    return Hyperparams(
        float(np.mean([h.lam for h in tail])), float(np.mean([h.sigma2 for h in tail]))
    )
