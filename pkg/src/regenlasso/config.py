"""Run configuration: flat ``key = value`` files with command-line overrides."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .data import STANDARDIZE_MODES

OUTPUT_DIR_ENV = "REGENLASSO_OUTPUT_DIR"
MIN_T = 100
MIN_EXPECTED_REGENERATIONS = 10


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    data: str = ""
    response: str = "y"
    standardize: str = "unit-variance"
    hyper_source: str = "fixed"  # "fixed" or "empirical_bayes"
    lam: Optional[float] = None
    sigma: Optional[float] = None
    eb_init_lambda: float = 1.0
    eb_init_sigma: Optional[float] = None  # None -> residual sd of least squares
    eb_samples: int = 2000
    eb_burn: int = 200
    eb_iters: int = 30
    eb_average_last: int = 5
    pilot_length: int = 1000
    pilot_discard: int = 200
    alpha_grid: str = "geom:0.001:0.3:30"
    alpha: Optional[float] = None  # skips the grid search when set
    t: int = 5000
    epsilon: float = 0.01
    seed: int = 2024
    output_dir: str = ""
    ar1_max_t: int = 100_000
    bounds_max_t: int = 0  # 0 -> 2 * regenerative burn-in, at least 50
    lasso_tol: float = 1e-10

    def resolved(self) -> "RunConfig":
        out = self.output_dir or os.environ.get(OUTPUT_DIR_ENV, "") or "regenlasso-out"
        return replace(self, output_dir=out)

    def grid(self) -> np.ndarray:
        return parse_alpha_grid(self.alpha_grid)

    def as_lines(self) -> list[str]:
        lines = []
        for k, v in asdict(self).items():
            lines.append(f"{k} = {'' if v is None else v}")
        return lines


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_alpha_grid(spec: str) -> np.ndarray:
    """``geom:lo:hi:n``, ``lin:lo:hi:n`` or a comma-separated list."""
    spec = spec.strip()
    if spec.startswith(("geom:", "lin:")):
        kind, lo, hi, n = spec.split(":")
        fn = np.geomspace if kind == "geom" else np.linspace
        return fn(float(lo), float(hi), int(n))
    return np.array([float(v) for v in spec.split(",") if v.strip()])


def _coerce(key: str, raw: str):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    typ = str(_TYPES[key])
    raw = raw.strip()
    if "Optional" in typ and raw.lower() in ("", "none"):
        return None
    try:
        if "int" in typ:
            return int(raw)
        if "float" in typ:
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r}") from None
    return raw


def parse_pairs(pairs: Iterable[str], base: Optional[dict] = None) -> dict:
    values = dict(base or {})
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        key, raw = item.split("=", 1)
        key = key.strip().replace("-", "_")
        values[key] = _coerce(key, raw)
    return values


def load_config(path=None, overrides: Iterable[str] = ()) -> RunConfig:
    """Read a config file (``#`` starts a comment) and apply ``key=value`` overrides.

    A relative ``data`` path in a file is taken relative to that file.
    """
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        lines = []
        for raw in path.read_text(encoding="utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                lines.append(line)
        values = parse_pairs(lines)
        data = values.get("data")
        if data and not Path(data).is_absolute():
            values["data"] = str((path.parent / data).resolve())
    values = parse_pairs(overrides, values)
    return RunConfig(**values)


def validate_config(cfg: RunConfig, mean_psi: Optional[float] = None) -> list[tuple[str, str]]:
    """Return ``(level, message)`` findings; level is ``"error"`` or ``"warning"``.

    With ``mean_psi`` (from a tuning pilot) a warning is added when the run
    is expected to see fewer than ``MIN_EXPECTED_REGENERATIONS`` regenerations.
    """
    out = []

    def err(msg):
        out.append(("error", msg))

    if not cfg.data:
        err("data path is not set")
    elif not Path(cfg.data).is_file():
        err(f"data file not found: {cfg.data}")
    if not cfg.response:
        err("response column is not set")
    if cfg.standardize not in STANDARDIZE_MODES + ("none",):
        err(f"standardize must be one of {STANDARDIZE_MODES + ('none',)}")
    if cfg.hyper_source == "fixed":
        if cfg.lam is None or not cfg.lam > 0:
            err("fixed hyperparameters need lam > 0")
        if cfg.sigma is None or not cfg.sigma > 0:
            err("fixed hyperparameters need sigma > 0")
    elif cfg.hyper_source == "empirical_bayes":
        if not cfg.eb_init_lambda > 0:
            err("eb_init_lambda must be positive")
        if cfg.eb_init_sigma is not None and not cfg.eb_init_sigma > 0:
            err("eb_init_sigma must be positive")
        if cfg.eb_samples < 1 or cfg.eb_iters < 1 or cfg.eb_burn < 0:
            err("eb_samples and eb_iters must be >= 1 and eb_burn >= 0")
        if not 1 <= cfg.eb_average_last <= cfg.eb_iters:
            err("eb_average_last must lie in [1, eb_iters]")
    else:
        err(f"hyper_source must be 'fixed' or 'empirical_bayes', got {cfg.hyper_source!r}")
    if cfg.t < MIN_T:
        err(f"t = {cfg.t} is below the minimum of {MIN_T}")
    if not cfg.epsilon > 0:
        err("epsilon must be positive")
    if cfg.pilot_length < 10:
        err("pilot_length must be at least 10")
    if cfg.pilot_discard < 0:
        err("pilot_discard must be nonnegative")
    if cfg.alpha is not None:
        if not 0 < cfg.alpha < 0.5:
            err("alpha must lie in (0, 0.5)")
    else:
        try:
            grid = cfg.grid()
        except (ValueError, TypeError):
            err(f"cannot parse alpha_grid {cfg.alpha_grid!r}")
        else:
            if grid.size == 0 or np.any(grid <= 0) or np.any(grid >= 0.5):
                err("alpha_grid values must lie in (0, 0.5)")
    if mean_psi is not None and cfg.t * mean_psi < MIN_EXPECTED_REGENERATIONS:
        lam = f"lambda={cfg.lam:g}: " if cfg.lam is not None else ""
        out.append(
            (
                "warning",
                f"{lam}expected regenerations t * mean_psi = {cfg.t * mean_psi:.3g} < "
                f"{MIN_EXPECTED_REGENERATIONS}; the chain may need many more steps",
            )
        )
    return out
