"""Regenerative simulation for the Bayesian Lasso Gibbs sampler."""

from .data import ChainState, Dataset, Hyperparams, TourStats, load_csv, standardize
from .diagnostics import (
    AR1Fit,
    DiagnosticsReport,
    ar1_burnin,
    ar1_std_err,
    ar1_tv_bounds,
    batch_means,
    burnin_estimate,
    diagnose,
    ergodic_mean,
    eta_estimate,
    fit_ar1,
    tavc_estimate,
)
from .lasso import LassoFit, empirical_bayes, fit_lasso
from .regeneration import (
    ChainTrace,
    RegenWindow,
    extract_tours,
    regen_probability,
    run_regenerative_chain,
    s_function,
    sample_from_nu,
)
from .samplers import (
    RngStream,
    gibbs_step,
    log_tau_conditional,
    sample_beta_given_tau,
    sample_inverse_gaussian,
    sample_tau_given_beta,
)
from .tuning import AlphaGrid, empirical_quantile_window, grid_search_alpha

__version__ = "0.1.0"
