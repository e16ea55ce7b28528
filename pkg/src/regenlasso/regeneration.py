"""Minorization, fresh-cycle starts, and retrospective regeneration detection.

The small set is ``R^p x [c, d]`` and the anchor point is ``(beta_hat, 1)``.
Given consecutive states ``X_k, X_{k+1}`` the probability that the transition
came from the regeneration component is

    psi_k = exp(-(d - tau')^T (beta_k^2 - beta_hat^2)_+ / 2
                - (c - tau')^T (beta_k^2 - beta_hat^2)_- / 2) * 1{tau' in [c, d]}

with ``tau'`` the tau-block of ``X_{k+1}``. The normalizer of the
regeneration measure cancels and is never computed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .data import ChainState, Dataset, Hyperparams, TourStats
from .samplers import as_generator, sample_beta_given_tau, sample_tau_given_beta, gibbs_step


class RegenerationError(RuntimeError):
    pass


class InsufficientRegenerations(RegenerationError):
    """Fewer complete tours than a computation needs."""


@dataclass(frozen=True)
class RegenWindow:
    beta_hat: np.ndarray
    c: np.ndarray
    d: np.ndarray
    alpha: Optional[float] = None

    def __post_init__(self):
        beta_hat = np.asarray(self.beta_hat, dtype=float)
        c = np.asarray(self.c, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if not (beta_hat.shape == c.shape == d.shape and beta_hat.ndim == 1):
            raise ValueError("beta_hat, c and d must be vectors of equal length")
        if not (np.all(c > 0) and np.all(c <= d)):
            raise ValueError("window bounds must satisfy 0 < c <= d")
        object.__setattr__(self, "beta_hat", beta_hat)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def p(self) -> int:
        return self.beta_hat.size


@dataclass(frozen=True)
class ChainTrace:
    """A simulated chain ``X_0..X_t`` with its retrospective regeneration flags.

    ``regen_flags[k]`` refers to the transition ``X_k -> X_{k+1}``; when set,
    ``X_{k+1}`` opens a new tour and ``k + 1`` is a tour boundary.
    """

    beta: np.ndarray  # (t+1, p)
    tau: np.ndarray  # (t+1, p)
    regen_flags: np.ndarray  # (t,) bool
    psi: np.ndarray  # (t,)
    hyper: Hyperparams
    window: RegenWindow
    seed: int
    stream_id: int
    nu_rejections: int = 0

    @property
    def t(self) -> int:
        return self.beta.shape[0] - 1

    @property
    def tour_boundaries(self) -> np.ndarray:
        return np.concatenate(([0], np.flatnonzero(self.regen_flags) + 1))

    @property
    def n_regenerations(self) -> int:
        return int(np.count_nonzero(self.regen_flags))

    def state(self, k: int) -> ChainState:
        return ChainState(self.beta[k], self.tau[k])


def _split(beta, beta_hat):
    delta = np.asarray(beta, dtype=float) ** 2 - beta_hat**2
    return np.maximum(delta, 0.0), np.minimum(delta, 0.0)


def s_function(state: ChainState, window: RegenWindow) -> float:
    """The epsilon-free factor of the minorizing function s (testing aid).

    Not bounded by one: the exponent is not sign-definite. Only the product
    forming psi is a probability.
    """
    pos, neg = _split(state.beta, window.beta_hat)
    return float(np.exp(-0.5 * window.d @ pos - 0.5 * window.c @ neg))


def regen_probability(state_k: ChainState, tau_next, window: RegenWindow) -> float:
    tau_next = np.asarray(tau_next, dtype=float)
    if np.any(tau_next < window.c) or np.any(tau_next > window.d):
        return 0.0
    pos, neg = _split(state_k.beta, window.beta_hat)
    return float(np.exp(-0.5 * (window.d - tau_next) @ pos - 0.5 * (window.c - tau_next) @ neg))


def regen_probabilities(beta_prev: np.ndarray, tau_next: np.ndarray, window: RegenWindow) -> np.ndarray:
    """Vectorized psi over rows: ``beta_prev[k]`` pairs with ``tau_next[k]``."""
    pos, neg = _split(beta_prev, window.beta_hat)
    expo = -0.5 * np.sum((window.d - tau_next) * pos, axis=1) - 0.5 * np.sum((window.c - tau_next) * neg, axis=1)
    inside = np.all((tau_next >= window.c) & (tau_next <= window.d), axis=1)
    return np.where(inside, np.exp(expo), 0.0)


def sample_from_nu(
    window: RegenWindow,
    ds: Dataset,
    hp: Hyperparams,
    rng,
    max_attempts: int = 1_000_000,
) -> tuple[ChainState, int]:
    """Exact draw from the regeneration measure by rejection.

    Proposes tau from its conditional at ``beta_hat`` until it lands in
    ``[c, d]``, then draws beta given the accepted tau; this is one Gibbs step
    from ``(beta_hat, 1)`` conditioned on the small set. Returns the state and
    the number of rejected proposals.
    """
    for attempt in range(max_attempts):
        tau = sample_tau_given_beta(window.beta_hat, hp.lam, rng)
        if np.all(tau >= window.c) and np.all(tau <= window.d):
            beta = sample_beta_given_tau(ds, tau, hp.sigma2, rng)
            return ChainState(beta, tau), attempt
    raise RegenerationError(
        f"no proposal landed in the window after {max_attempts} attempts; "
        "the regeneration measure has negligible mass for this window"
    )


PsiHook = Union[None, float, Callable[[ChainState, np.ndarray, RegenWindow], float]]


def run_regenerative_chain(
    ds: Dataset,
    hp: Hyperparams,
    window: RegenWindow,
    t: int,
    rng,
    start: Optional[ChainState] = None,
    psi_override: PsiHook = None,
) -> ChainTrace:
    """Simulate ``X_0..X_t`` from a fresh cycle and flag regenerations.

    ``X_0`` is drawn from the regeneration measure unless ``start`` is given.
    After each transition the Bernoulli(psi_k) flag is drawn from the same
    stream. ``psi_override`` (a constant or callable) replaces psi and exists
    for tests.
    """
    if t < 2:
        raise ValueError("chain length t must be at least 2")
    gen = as_generator(rng)
    rejections = 0
    if start is None:
        start, rejections = sample_from_nu(window, ds, hp, rng)
    p = ds.p
    betas = np.empty((t + 1, p))
    taus = np.empty((t + 1, p))
    flags = np.zeros(t, dtype=bool)
    psis = np.empty(t)
    betas[0], taus[0] = start.beta, start.tau
    state = start
    for k in range(t):
        nxt = gibbs_step(state, ds, hp, rng)
        if psi_override is None:
            psi = regen_probability(state, nxt.tau, window)
        elif callable(psi_override):
            psi = float(psi_override(state, nxt.tau, window))
        else:
            psi = float(psi_override)
        if not 0.0 <= psi <= 1.0:
            raise RegenerationError(f"regeneration probability {psi} outside [0, 1] at step {k}")
        psis[k] = psi
        flags[k] = gen.random() < psi
        betas[k + 1], taus[k + 1] = nxt.beta, nxt.tau
        state = nxt
    seed = getattr(rng, "seed", -1)
    stream_id = getattr(rng, "stream_id", -1)
    return ChainTrace(betas, taus, flags, psis, hp, window, seed, stream_id, rejections)


def extract_tours(trace: ChainTrace, coords: Optional[Sequence[int]] = None) -> list[TourStats]:
    """Complete tours with their lengths and per-coordinate beta sums.

    The trailing incomplete tour is dropped (its states still count toward
    the ergodic mean).
    """
    bounds = trace.tour_boundaries
    if bounds.size < 2:
        raise InsufficientRegenerations(
            "no complete tour: need at least two regenerations; run the chain longer"
        )
    values = trace.beta if coords is None else trace.beta[:, list(coords)]
    cums = np.vstack([np.zeros(values.shape[1]), np.cumsum(values, axis=0)])
    tours = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        tours.append(TourStats(int(b - a), cums[b] - cums[a]))
    return tours


def tour_arrays(tours: Sequence[TourStats]) -> tuple[np.ndarray, np.ndarray]:
    """Stack tours into ``(M, H)`` arrays of shapes ``(N,)`` and ``(N, q)``."""
    M = np.array([tr.M for tr in tours], dtype=float)
    H = np.array([np.atleast_1d(tr.H) for tr in tours], dtype=float)
    return M, H


def write_trace_csv(trace: ChainTrace, path) -> None:
    """Export as ``step, beta_1..p, tau_1..p, regen_flag``."""
    p = trace.beta.shape[1]
    header = ["step"] + [f"beta_{j + 1}" for j in range(p)] + [f"tau_{j + 1}" for j in range(p)] + ["regen_flag"]
    flags = np.append(trace.regen_flags.astype(int), 0)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(trace.t + 1):
            w.writerow(
                [k]
                + [repr(float(v)) for v in trace.beta[k]]
                + [repr(float(v)) for v in trace.tau[k]]
                + [int(flags[k])]
            )
