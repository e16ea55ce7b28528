"""End-to-end run: data -> hyperparameters -> anchor -> tuning -> regenerative
chain -> diagnostics -> report files."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import RunConfig, validate_config
from .data import Dataset, Hyperparams, load_csv, standardize
from .diagnostics import DiagnosticsReport, diagnose
from .lasso import LassoFit, empirical_bayes, fit_lasso
from .regeneration import ChainTrace, RegenWindow, run_regenerative_chain, write_trace_csv
from .samplers import RngStream
from .tuning import AlphaGrid, empirical_quantile_window, grid_search_alpha, run_pilot, write_profile_csv

log = logging.getLogger(__name__)

# one independent stream per stage
STREAM_EB, STREAM_PILOT, STREAM_CHAIN, STREAM_BOOT = 0, 1, 2, 3


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    config: RunConfig
    dataset: Dataset
    hyper: Hyperparams
    lasso: LassoFit
    alpha: Optional[float] = None
    window: Optional[RegenWindow] = None
    profile: Optional[AlphaGrid] = None
    trace: Optional[ChainTrace] = None
    report: Optional[DiagnosticsReport] = None
    files: dict = field(default_factory=dict)


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def prepare_data(cfg: RunConfig) -> Dataset:
    with _Stage("load_csv"):
        ds = load_csv(cfg.data, cfg.response)
    if cfg.standardize != "none":
        with _Stage("standardize"):
            ds = standardize(ds, cfg.standardize)
    return ds


def resolve_hyper(cfg: RunConfig, ds: Dataset) -> Hyperparams:
    if cfg.hyper_source == "fixed":
        return Hyperparams(cfg.lam, cfg.sigma**2)
    with _Stage("empirical_bayes"):
        if cfg.eb_init_sigma is None:
            coef = np.linalg.lstsq(ds.X, ds.y, rcond=None)[0]
            r = ds.y - ds.X @ coef
            sigma2 = float(r @ r / max(ds.n - ds.p, 1))
        else:
            sigma2 = cfg.eb_init_sigma**2
        hp = empirical_bayes(
            ds,
            Hyperparams(cfg.eb_init_lambda, sigma2),
            gibbs_samples_per_iter=cfg.eb_samples,
            iters=cfg.eb_iters,
            rng=RngStream(cfg.seed, STREAM_EB),
            burn=cfg.eb_burn,
            average_last=cfg.eb_average_last,
        )
    log.info("empirical Bayes: lambda=%.6g sigma=%.6g", hp.lam, hp.sigma)
    return hp


def tune(cfg: RunConfig, ds: Dataset, hp: Hyperparams, fit: LassoFit):
    """Pilot run plus grid search; returns ``(alpha, window, profile)``."""
    with _Stage("pilot"):
        pilot = run_pilot(
            ds, hp, fit.beta_hat, cfg.pilot_length, RngStream(cfg.seed, STREAM_PILOT), cfg.pilot_discard
        )
    with _Stage("grid_search_alpha"):
        if cfg.alpha is not None:
            window = empirical_quantile_window(pilot, cfg.alpha, fit.beta_hat)
            return cfg.alpha, window, None
        alpha, window, profile = grid_search_alpha(pilot, cfg.grid(), fit.beta_hat)
    log.info("alpha* = %.4g, mean psi = %.4g", alpha, float(np.max(profile.mean_psi)))
    for level, msg in validate_config(cfg, float(np.max(profile.mean_psi))):
        if level == "warning":
            log.warning(msg)
    return alpha, window, profile


def run_pipeline(cfg: RunConfig, stop_after: str = "report", write: bool = True) -> PipelineResult:
    """Execute the pipeline; ``stop_after`` is ``"eb"``, ``"tune"`` or ``"report"``.

    Raises :class:`StageError` naming the failing stage. Insufficient
    regenerations surface as a ``StageError`` whose ``cause`` is
    :class:`~regenlasso.regeneration.InsufficientRegenerations`.
    """
    cfg = cfg.resolved()
    outdir = Path(cfg.output_dir)
    if write:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "config_resolved.txt").write_text("\n".join(cfg.as_lines()) + "\n", encoding="utf-8")
    log.info("resolved config: %s", "; ".join(cfg.as_lines()))

    ds = prepare_data(cfg)
    hp = resolve_hyper(cfg, ds)
    with _Stage("fit_lasso"):
        fit = fit_lasso(ds, hp.lam, tol=cfg.lasso_tol)
    result = PipelineResult(cfg, ds, hp, fit)
    if write:
        path = outdir / "hyperparams.txt"
        path.write_text(f"lambda = {hp.lam!r}\nsigma2 = {hp.sigma2!r}\nsigma = {hp.sigma!r}\n", encoding="utf-8")
        result.files["hyperparams"] = path
    if stop_after == "eb":
        return result

    alpha, window, profile = tune(cfg, ds, hp, fit)
    result.alpha, result.window, result.profile = alpha, window, profile
    if write and profile is not None:
        path = outdir / "alpha_profile.csv"
        write_profile_csv(profile, path)
        result.files["alpha_profile"] = path
    if stop_after == "tune":
        return result

    with _Stage("run_regenerative_chain"):
        trace = run_regenerative_chain(ds, hp, window, cfg.t, RngStream(cfg.seed, STREAM_CHAIN))
    result.trace = trace
    log.info("%d regenerations in %d steps", trace.n_regenerations, cfg.t)
    if write:
        path = outdir / "trace.csv"
        write_trace_csv(trace, path)
        result.files["trace"] = path
    with _Stage("diagnostics"):
        report = diagnose(
            trace,
            epsilon=cfg.epsilon,
            names=ds.column_names,
            boot_rng=RngStream(cfg.seed, STREAM_BOOT),
            ar1_max_t=cfg.ar1_max_t,
        )
    result.report = report
    if write:
        result.files.update(write_report(report, outdir, cfg.bounds_max_t, hp))
    return result


# -- report writers --------------------------------------------------------------

COLUMNS = ("Mean", "Standard error", "AR(1) st. err.", "Relative error", "AR(1) rel. err.")


def _sig(x: float) -> str:
    return f"{x:.4e}"


def report_rows(report: DiagnosticsReport) -> list[list[str]]:
    """Markdown cells; relative errors come from the displayed mean and errors."""
    rows = []
    for j, name in enumerate(report.names):
        mean_s = _sig(report.mean[j])
        se_s = _sig(report.std_err[j])
        ar_s = _sig(report.ar1_std_err[j])
        m = abs(float(mean_s))
        rows.append([name, mean_s, se_s, ar_s, _sig(float(se_s) / m), _sig(float(ar_s) / m)])
    return rows


def render_markdown(report: DiagnosticsReport, hp: Optional[Hyperparams] = None) -> str:
    lines = ["# Regenerative output analysis", ""]
    if hp is not None:
        lines.append(f"- lambda = {hp.lam:.6g}, sigma = {hp.sigma:.6g}")
    if report.alpha is not None:
        lines.append(f"- alpha = {report.alpha:.6g}")
    lines += [
        f"- steps t = {report.t}",
        f"- complete tours N(t) = {report.n_tours}",
        f"- mean regeneration probability = {report.mean_psi:.6g}",
        f"- eta = {report.eta:.6g} (95% bootstrap CI {report.eta_ci[0]:.6g} to {report.eta_ci[1]:.6g})",
        f"- {report.epsilon:g}-burn-in (regenerative) = {report.burnin}",
        f"- {report.epsilon:g}-burn-in (AR(1) heuristic) = "
        + ("not reached" if report.ar1_burnin is None else str(report.ar1_burnin)),
        "",
        "| | " + " | ".join(COLUMNS) + " |",
        "|---|" + "---|" * len(COLUMNS),
    ]
    for row in report_rows(report):
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def write_report(report: DiagnosticsReport, outdir, bounds_max_t: int = 0, hp: Optional[Hyperparams] = None) -> dict:
    outdir = Path(outdir)
    files = {}
    md = outdir / "report.md"
    md.write_text(render_markdown(report, hp), encoding="utf-8")
    files["report_md"] = md

    path = outdir / "report.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "mean", "std_err", "ar1_std_err", "rel_err", "ar1_rel_err"])
        for j, name in enumerate(report.names):
            vals = (report.mean[j], report.std_err[j], report.ar1_std_err[j], report.rel_err[j], report.ar1_rel_err[j])
            w.writerow([name] + [f"{v:.10e}" for v in vals])
        w.writerow([])
        w.writerow(["key", "value"])
        w.writerow(["t", report.t])
        w.writerow(["n_tours", report.n_tours])
        w.writerow(["mean_psi", f"{report.mean_psi:.10e}"])
        w.writerow(["eta", f"{report.eta:.10e}"])
        w.writerow(["eta_ci_low", f"{report.eta_ci[0]:.10e}"])
        w.writerow(["eta_ci_high", f"{report.eta_ci[1]:.10e}"])
        w.writerow(["epsilon", repr(report.epsilon)])
        w.writerow(["burnin", report.burnin])
        w.writerow(["ar1_burnin", "" if report.ar1_burnin is None else report.ar1_burnin])
    files["report_csv"] = path

    max_t = bounds_max_t or max(50, 2 * report.burnin)
    curve = report.bounds_curve(max_t)
    path = outdir / "bounds_curve.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "regenerative_bound", "hellinger", "kl"])
        for k in range(curve["t"].size):
            w.writerow(
                [int(curve["t"][k])]
                + [f"{curve[key][k]:.10e}" for key in ("regenerative_bound", "hellinger", "kl")]
            )
    files["bounds_curve"] = path
    return files
