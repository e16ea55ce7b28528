"""Random variates and the two-block Gibbs kernel for the Bayesian Lasso.

The augmented target is

    pi(beta, tau) ∝ exp(-|y - X beta|^2 / (2 sigma2))
                    * prod_j tau_j^(-3/2) exp(-beta_j^2 tau_j / 2 - lam^2 / (2 tau_j))

whose beta-marginal is the Laplace-prior posterior. Each step draws tau given
beta (independent inverse-Gaussian coordinates) and then beta given tau
(multivariate normal).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from .data import ChainState, Dataset, Hyperparams

# lower bound on |beta_j| when forming the inverse-Gaussian mean lam / |beta_j|
BETA_FLOOR = 1e-10


@dataclass
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Distinct stream ids give statistically independent streams for the same
    seed, so parallel chains never share variates.
    """

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=(int(self.stream_id),))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def sample_inverse_gaussian(mu, shape, rng, size=None):
    """Draw from the inverse-Gaussian (Wald) law with mean ``mu`` and shape ``shape``.

    Michael, Schucany & Haas transformation with one rejection step. The
    smaller root is computed as ``mu / (1 + w + sqrt(w^2 + 2w))`` which avoids
    cancellation when ``mu`` is huge relative to ``shape``.

    Returns a float when all inputs are scalars, otherwise an array.
    """
    mu = np.asarray(mu, dtype=float)
    shape = np.asarray(shape, dtype=float)
    if np.any(~(mu > 0)) or np.any(~(shape > 0)):
        raise ValueError("inverse-Gaussian parameters must be positive")
    gen = as_generator(rng)
    if size is None:
        size = np.broadcast(mu, shape).shape
    nu = gen.standard_normal(size)
    u = gen.random(size)
    w = mu * nu * nu / (2.0 * shape)
    x = mu / (1.0 + w + np.sqrt(w * (w + 2.0)))
    out = np.where(u * (mu + x) <= mu, x, mu * mu / x)
    if out.ndim == 0:
        return float(out)
    return out


def sample_tau_given_beta(beta, lam: float, rng) -> np.ndarray:
    """tau_j | beta_j ~ IG(mean=lam/|beta_j|, shape=lam^2), independently.

    ``|beta_j|`` is floored at ``BETA_FLOOR`` so zero coefficients give a
    large but finite mean.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    absb = np.maximum(np.abs(np.asarray(beta, dtype=float)), BETA_FLOOR)
    return sample_inverse_gaussian(lam / absb, np.full(absb.shape, lam * lam), rng)


def beta_conditional(ds: Dataset, tau, sigma2: float):
    """Return ``(mean, chol)`` of beta | tau.

    The precision (up to the 1/sigma2 factor) is ``X^T X + sigma2 * diag(tau)``;
    ``chol`` is its lower Cholesky factor. Covariance is ``sigma2 * inv(P)``.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(~(tau > 0)):
        raise ValueError("tau must be strictly positive")
    P = ds.gram + np.diag(sigma2 * tau)
    try:
        c, lower = cho_factor(P, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise LinAlgError(f"Cholesky factorization of X^T X + sigma2*diag(tau) failed: {exc}") from exc
    mean = cho_solve((c, lower), ds.xty, check_finite=False)
    return mean, np.tril(c)


def sample_beta_given_tau(ds: Dataset, tau, sigma2: float, rng) -> np.ndarray:
    mean, L = beta_conditional(ds, tau, sigma2)
    z = as_generator(rng).standard_normal(ds.p)
    return mean + np.sqrt(sigma2) * solve_triangular(L, z, lower=True, trans="T", check_finite=False)


def gibbs_step(state: ChainState, ds: Dataset, hp: Hyperparams, rng) -> ChainState:
    """One transition: tau from its conditional given beta, then beta given the new tau."""
    tau = sample_tau_given_beta(state.beta, hp.lam, rng)
    beta = sample_beta_given_tau(ds, tau, hp.sigma2, rng)
    return ChainState(beta, tau)


def log_tau_conditional(tau, beta, lam: float) -> float:
    """Normalized log density of tau | beta, summed over coordinates.

    Each coordinate is IG(mean=lam/|beta_j|, shape=lam^2), which expands to
    ``log(lam) - log(2 pi)/2 - 1.5 log(tau) - beta^2 tau/2 + lam|beta| - lam^2/(2 tau)``;
    this form is exact at ``beta_j = 0`` too.
    """
    tau = np.asarray(tau, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(~(tau > 0)):
        raise ValueError("tau must be strictly positive")
    terms = (
        np.log(lam)
        - 0.5 * np.log(2.0 * np.pi)
        - 1.5 * np.log(tau)
        - 0.5 * beta * beta * tau
        + lam * np.abs(beta)
        - 0.5 * lam * lam / tau
    )
    return float(np.sum(terms))


def log_posterior_unnormalized(beta, ds: Dataset, hp: Hyperparams) -> float:
    """Log of the Laplace-prior posterior of beta, up to an additive constant."""
    beta = np.asarray(beta, dtype=float)
    r = ds.y - ds.X @ beta
    return float(-0.5 * (r @ r) / hp.sigma2 - hp.lam * np.sum(np.abs(beta)))
