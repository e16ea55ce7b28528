"""Output analysis: ergodic means, regenerative and batch-means variance,
regenerative burn-in, and the AR(1) heuristic used for comparison."""

from __future__ import annotations

import math
import warnings
from fractions import Fraction
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import TourStats
from .regeneration import ChainTrace, InsufficientRegenerations, tour_arrays
from .samplers import as_generator


class AR1Error(ValueError):
    """The AR(1) fit is unusable for bounds (|rho| >= 1 or degenerate series)."""


def ergodic_mean(trace: ChainTrace, coordinate: int) -> float:
    """Mean of ``beta[coordinate]`` over all ``t + 1`` states."""
    return float(np.mean(trace.beta[:, coordinate]))


def _require_tours(tours, need: int = 2):
    if len(tours) < need:
        raise InsufficientRegenerations(
            f"{len(tours)} complete tour(s); at least {need} are needed. "
            "Observe at least two regenerations before estimating the variance: "
            "run the chain longer or retune the regeneration window."
        )


def tavc_estimate(tours: Sequence[TourStats], q_hat, t: int):
    """Regenerative ratio estimator of the time-average variance constant.

    ``sum_r (H_r - q_hat M_r)^2 / t`` over complete tours. ``q_hat`` may be a
    scalar or one value per monitored coordinate.
    """
    _require_tours(tours)
    M, H = tour_arrays(tours)
    if t < M.sum():
        raise ValueError(f"t={t} is smaller than the total tour length {int(M.sum())}")
    q_hat = np.asarray(q_hat, dtype=float)
    resid = H - M[:, None] * q_hat
    gamma2 = np.sum(resid * resid, axis=0) / t
    return float(gamma2[0]) if gamma2.size == 1 and q_hat.ndim == 0 else gamma2


def tavc_std_err(gamma2, t: int):
    """Standard error of the ergodic mean, ``sqrt(gamma2 / t)``."""
    return np.sqrt(np.asarray(gamma2, dtype=float) / t)


def relative_error(std_err, mean):
    return np.abs(np.asarray(std_err, dtype=float)) / np.abs(np.asarray(mean, dtype=float))


def batch_means(values, n_batches: int) -> float:
    """Sample variance of the batch means.

    Returns the variance of the means of ``n_batches`` contiguous batches of
    equal size ``m``; ``sqrt(result / n_batches)`` is then the standard error
    of the overall mean. A remainder that does not fill a batch is dropped
    with a warning.
    """
    x = np.asarray(values, dtype=float)
    if n_batches < 2:
        raise ValueError("need at least two batches")
    m = x.size // n_batches
    if m < 1:
        raise ValueError(f"{x.size} values cannot fill {n_batches} batches")
    if m * n_batches != x.size:
        warnings.warn(
            f"dropping {x.size - m * n_batches} trailing value(s) to form equal batches",
            RuntimeWarning,
            stacklevel=2,
        )
        x = x[: m * n_batches]
    means = x.reshape(n_batches, m).mean(axis=1)
    return float(np.sum((means - x.mean()) ** 2) / (n_batches - 1))


# -- regenerative burn-in ------------------------------------------------------


@dataclass(frozen=True)
class EtaEstimate:
    eta: float
    ci: tuple[float, float]


def eta_estimate(tours: Sequence[TourStats], rng=None, n_boot: int = 2000, level: float = 0.95) -> EtaEstimate:
    """Plug-in ``(sum M^2 - sum M) / (2 sum M)`` with a bootstrap percentile CI.

    The interval resamples whole tours; ``rng`` defaults to a fixed stream so
    repeated calls agree.
    """
    _require_tours(tours)
    M = np.array([tr.M for tr in tours], dtype=float)
    eta = float(_eta_exact(tours))
    gen = as_generator(rng) if rng is not None else np.random.default_rng(0)
    idx = gen.integers(0, M.size, size=(n_boot, M.size))
    Mb = M[idx]
    sums = Mb.sum(axis=1)
    boot = (np.sum(Mb * Mb, axis=1) - sums) / (2.0 * sums)
    tail = 0.5 * (1.0 - level)
    lo, hi = np.quantile(boot, [tail, 1.0 - tail])
    return EtaEstimate(eta, (float(lo), float(hi)))


def _eta_exact(tours) -> Fraction:
    M = [int(tr.M) for tr in tours]
    total = sum(M)
    return Fraction(sum(m * m for m in M) - total, 2 * total)


def burnin_estimate(tours: Sequence[TourStats], epsilon: float) -> int:
    """``ceil(eta / epsilon)``: burn-in after which the TV bound drops below epsilon.

    Evaluated in rational arithmetic (epsilon taken at its decimal value) so
    the ceiling is never off by one from rounding.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    _require_tours(tours)
    return math.ceil(_eta_exact(tours) / Fraction(repr(float(epsilon))))


def regenerative_tv_bound(eta: float, t) -> np.ndarray:
    """Leading term ``eta / (t + 1)`` of the total-variation bound."""
    return eta / (np.asarray(t, dtype=float) + 1.0)


# -- AR(1) heuristic -------------------------------------------------------------


@dataclass(frozen=True)
class AR1Fit:
    c: float
    rho: float
    sigma_eps: float
    y0: float

    @property
    def stationary(self) -> bool:
        return abs(self.rho) < 1.0

    @property
    def mean(self) -> float:
        return self.c / (1.0 - self.rho)

    @property
    def variance(self) -> float:
        return self.sigma_eps**2 / (1.0 - self.rho**2)

    def mean_at(self, t):
        rt = self.rho ** np.asarray(t, dtype=float)
        return self.c * (1.0 - rt) / (1.0 - self.rho) + rt * self.y0

    def variance_at(self, t):
        r2t = self.rho ** (2.0 * np.asarray(t, dtype=float))
        return self.sigma_eps**2 * (1.0 - r2t) / (1.0 - self.rho**2)


def fit_ar1(series) -> AR1Fit:
    """Least-squares regression of ``Y[k+1]`` on ``(1, Y[k])``.

    ``sigma_eps`` is the residual standard deviation with two degrees of
    freedom removed; ``y0`` is the first observation. A fit with
    ``|rho| >= 1`` is returned as is; the bound functions refuse it.
    """
    y = np.asarray(series, dtype=float)
    if y.size < 10:
        raise AR1Error("AR(1) fit needs at least 10 observations")
    if np.ptp(y) == 0:
        raise AR1Error("cannot fit AR(1) to a constant series")
    x, z = y[:-1], y[1:]
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, z, rcond=None)
    resid = z - design @ coef
    sigma_eps = float(np.sqrt(resid @ resid / (z.size - 2)))
    return AR1Fit(float(coef[0]), float(coef[1]), sigma_eps, float(y[0]))


def _check_stationary(fit: AR1Fit):
    if not fit.stationary:
        raise AR1Error(f"AR(1) fit has |rho| = {abs(fit.rho):.4g} >= 1; bounds are undefined")


def ar1_tv_bounds(fit: AR1Fit, t) -> tuple:
    """Hellinger-based and KL/Pinsker-based bounds on TV(Y_t, Y_inf).

    Both closed forms are evaluated as written and clipped to [0, 1]. ``t``
    may be an integer or an array.
    """
    _check_stationary(fit)
    t = np.asarray(t, dtype=float)
    rho, ce, se = fit.rho, fit.c, fit.sigma_eps
    r2t = rho ** (2.0 * t)
    rt = rho**t
    one_m = 1.0 - rho**2
    shift = ce * (1.0 - rt) / (1.0 - rho) + rt * fit.y0 - ce / (1.0 - rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        # 2 - 2*sqrt(2 sqrt(1-r2t) / (2-r2t)) * exp(-E), via expm1/log1p to keep
        # precision once the bound is small
        log_ratio = 0.5 * np.log1p(-r2t) - np.log1p(-0.5 * r2t)
        expo = shift**2 / (4.0 * se**2 * ((1.0 - r2t) / one_m + 1.0 / one_m))
        hell = np.sqrt(np.maximum(-2.0 * np.expm1(0.5 * log_ratio - expo), 0.0))
        kl_arg = r2t * (fit.y0 - ce / (1.0 - rho)) ** 2 / (se**2 / one_m) - r2t - np.log1p(-r2t)
        kl = 0.5 * np.sqrt(np.maximum(kl_arg, 0.0))
    hell = np.clip(np.nan_to_num(hell, nan=1.0, posinf=1.0), 0.0, 1.0)
    kl = np.clip(np.nan_to_num(kl, nan=1.0, posinf=1.0), 0.0, 1.0)
    if t.ndim == 0:
        return float(hell), float(kl)
    return hell, kl


def ar1_tavc(fit: AR1Fit) -> float:
    """Exact time-average variance constant of a stationary AR(1)."""
    _check_stationary(fit)
    return fit.sigma_eps**2 / (1.0 - fit.rho) ** 2


def ar1_std_err(fit: AR1Fit, t: int) -> float:
    return float(math.sqrt(ar1_tavc(fit) / t))


def ar1_burnin(fit: AR1Fit, epsilon: float, max_t: int = 100_000) -> int:
    """Smallest ``t <= max_t`` with ``min(hellinger, kl) < epsilon``."""
    _check_stationary(fit)
    steps = np.arange(max_t + 1)
    hell, kl = ar1_tv_bounds(fit, steps)
    hit = np.flatnonzero(np.minimum(hell, kl) < epsilon)
    if hit.size == 0:
        raise AR1Error(f"TV bound does not fall below {epsilon} within {max_t} steps")
    return int(hit[0])


def ar1_burnin_max(fits: Sequence[AR1Fit], epsilon: float, max_t: int = 100_000) -> int:
    """Burn-in of the slowest coordinate."""
    return max(ar1_burnin(f, epsilon, max_t) for f in fits)


# -- report ------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsReport:
    names: tuple[str, ...]
    mean: np.ndarray
    std_err: np.ndarray
    ar1_std_err: np.ndarray
    t: int
    n_tours: int
    mean_psi: float
    eta: float
    eta_ci: tuple[float, float]
    epsilon: float
    burnin: int
    ar1_fits: tuple[AR1Fit, ...]
    ar1_burnin: Optional[int]
    alpha: Optional[float] = None

    @property
    def rel_err(self) -> np.ndarray:
        return relative_error(self.std_err, self.mean)

    @property
    def ar1_rel_err(self) -> np.ndarray:
        return relative_error(self.ar1_std_err, self.mean)

    def bounds_curve(self, max_t: int) -> dict:
        """Regenerative, Hellinger and KL bounds for ``t = 0..max_t``.

        AR(1) bounds take the largest value across coordinates at each step.
        """
        steps = np.arange(max_t + 1)
        usable = [f for f in self.ar1_fits if f.stationary]
        if usable:
            hk = [ar1_tv_bounds(f, steps) for f in usable]
            hell = np.max([h for h, _ in hk], axis=0)
            kl = np.max([k for _, k in hk], axis=0)
        else:
            hell = kl = np.full(steps.size, np.nan)
        return {
            "t": steps,
            "regenerative_bound": regenerative_tv_bound(self.eta, steps),
            "hellinger": hell,
            "kl": kl,
        }


def diagnose(
    trace: ChainTrace,
    epsilon: float = 0.01,
    names: Optional[Sequence[str]] = None,
    boot_rng=None,
    ar1_max_t: int = 100_000,
) -> DiagnosticsReport:
    """Full per-coordinate and global diagnostics for one regenerative run."""
    from .regeneration import extract_tours

    p = trace.beta.shape[1]
    names = tuple(names) if names is not None else tuple(f"beta_{j + 1}" for j in range(p))
    tours = extract_tours(trace)
    _require_tours(tours)
    t = trace.t
    mean = trace.beta.mean(axis=0)
    gamma2 = np.atleast_1d(tavc_estimate(tours, mean, t))
    std_err = tavc_std_err(gamma2, t)
    fits = tuple(fit_ar1(trace.beta[:, j]) for j in range(p))
    ar1_se = np.array([ar1_std_err(f, t) if f.stationary else np.nan for f in fits])
    eta = eta_estimate(tours, rng=boot_rng)
    try:
        ar1_b = ar1_burnin_max(fits, epsilon, ar1_max_t)
    except AR1Error:
        ar1_b = None
    return DiagnosticsReport(
        names=names,
        mean=mean,
        std_err=std_err,
        ar1_std_err=ar1_se,
        t=t,
        n_tours=len(tours),
        mean_psi=float(np.mean(trace.psi)),
        eta=eta.eta,
        eta_ci=eta.ci,
        epsilon=epsilon,
        burnin=burnin_estimate(tours, epsilon),
        ar1_fits=fits,
        ar1_burnin=ar1_b,
        alpha=trace.window.alpha,
    )
