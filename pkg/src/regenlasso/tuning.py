"""Grid search over the quantile level that sets the regeneration window."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import ChainState, Dataset, Hyperparams
from .regeneration import RegenWindow, regen_probabilities
from .samplers import gibbs_step

# linear interpolation between order statistics ("type 7")
QUANTILE_METHOD = "linear"


def default_alpha_grid(n: int = 30, lo: float = 1e-3, hi: float = 0.3) -> np.ndarray:
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True)
class AlphaGrid:
    values: np.ndarray
    mean_psi: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size > 1 and np.any(np.diff(values) <= 0):
            raise ValueError("alpha grid must be strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mean_psi", np.asarray(self.mean_psi, dtype=float))


@dataclass(frozen=True)
class PilotRun:
    """States of a pilot chain, used only for tuning."""

    beta: np.ndarray
    tau: np.ndarray

    @property
    def t(self) -> int:
        return self.beta.shape[0]


def run_pilot(
    ds: Dataset,
    hp: Hyperparams,
    beta_start,
    length: int,
    rng,
    discard: int = 200,
) -> PilotRun:
    """Plain Gibbs run from ``(beta_start, 1)`` keeping ``length`` states after ``discard``."""
    state = ChainState(np.asarray(beta_start, dtype=float), np.ones(ds.p))
    betas = np.empty((length, ds.p))
    taus = np.empty((length, ds.p))
    for k in range(discard + length):
        state = gibbs_step(state, ds, hp, rng)
        if k >= discard:
            betas[k - discard], taus[k - discard] = state.beta, state.tau
    return PilotRun(betas, taus)


def empirical_quantile_window(pilot, alpha: float, beta_hat) -> RegenWindow:
    """Window with ``c_j``, ``d_j`` the empirical alpha and 1-alpha quantiles of tau_j."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5), got {alpha}")
    tau = np.asarray(pilot.tau)
    if tau.shape[0] < 10:
        raise ValueError("pilot must contain at least 10 states")
    c = np.quantile(tau, alpha, axis=0, method=QUANTILE_METHOD)
    d = np.quantile(tau, 1.0 - alpha, axis=0, method=QUANTILE_METHOD)
    return RegenWindow(beta_hat, c, np.maximum(c, d), alpha)


def mean_regen_probability(pilot, window: RegenWindow) -> float:
    """Average psi over the consecutive pilot pairs."""
    psi = regen_probabilities(pilot.beta[:-1], pilot.tau[1:], window)
    return float(np.mean(psi))


def grid_search_alpha(
    pilot,
    grid: Optional[Sequence[float]],
    beta_hat,
) -> tuple[float, RegenWindow, AlphaGrid]:
    """Pick the grid value maximizing the average regeneration probability.

    The same pilot is reused for every grid point and no randomness is
    consumed. Ties resolve to the smallest alpha.
    """
    values = default_alpha_grid() if grid is None else np.sort(np.asarray(grid, dtype=float))
    if values.size == 0:
        raise ValueError("alpha grid is empty")
    windows = [empirical_quantile_window(pilot, a, beta_hat) for a in values]
    means = np.array([mean_regen_probability(pilot, w) for w in windows])
    best = int(np.argmax(means))  # first maximum, i.e. smallest alpha on ties
    if means[best] == 0.0:
        warnings.warn(
            "every alpha gives zero estimated regeneration probability; "
            "lengthen the pilot run or widen the grid",
            RuntimeWarning,
            stacklevel=2,
        )
    return float(values[best]), windows[best], AlphaGrid(values, means)


def write_profile_csv(profile: AlphaGrid, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "mean_psi"])
        for a, m in zip(profile.values, profile.mean_psi):
            w.writerow([f"{a:.10e}", f"{m:.10e}"])
