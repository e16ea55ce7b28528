"""Core data types and dataset ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

STANDARDIZE_MODES = ("unit-variance", "unit-l2-norm")


class DataError(ValueError):
    """Raised when a dataset cannot be read or transformed."""


@dataclass(frozen=True)
class Standardization:
    """Centering/scaling applied to a dataset, kept for back-transformation."""

    mode: str
    y_center: float
    x_center: np.ndarray
    x_scale: np.ndarray


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...]
    standardization: Optional[Standardization] = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError(f"X must be a non-empty matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains non-finite values")
        names = tuple(self.column_names)
        if len(names) != X.shape[1]:
            raise DataError("column_names must have one label per column of X")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @cached_property
    def gram(self) -> np.ndarray:
        """X^T X, computed once."""
        return self.X.T @ self.X

    @cached_property
    def xty(self) -> np.ndarray:
        return self.X.T @ self.y


@dataclass(frozen=True)
class Hyperparams:
    lam: float
    sigma2: float

    def __post_init__(self):
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not (self.sigma2 > 0 and np.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


@dataclass(frozen=True)
class ChainState:
    """One (beta, tau) point of the augmented chain; tau holds local precisions."""

    beta: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        tau = np.asarray(self.tau, dtype=float)
        if beta.ndim != 1 or beta.shape != tau.shape:
            raise ValueError("beta and tau must be vectors of equal length")
        if not np.all(tau > 0):
            raise ValueError("all tau entries must be positive")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "tau", tau)


@dataclass(frozen=True)
class TourStats:
    """Length M and per-coordinate sums H of one complete regeneration tour."""

    M: int
    H: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("tour length must be at least 1")


def load_csv(path, response_column: str) -> Dataset:
    """Read a headered, comma-separated numeric file.

    All non-response columns become predictors, in header order. No
    transformation is applied.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if response_column not in header:
            raise DataError(f"{path}: response column {response_column!r} not in header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            values = []
            for col, cell in zip(header, row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} at row {lineno}, column {col!r}"
                    ) from None
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    table = np.array(rows)
    yi = header.index(response_column)
    xi = [i for i in range(len(header)) if i != yi]
    return Dataset(table[:, xi], table[:, yi], tuple(header[i] for i in xi))


def _column_scale(Xc: np.ndarray, mode: str) -> np.ndarray:
    if mode == "unit-variance":
        return Xc.std(axis=0, ddof=1) if Xc.shape[0] > 1 else np.zeros(Xc.shape[1])
    return np.sqrt(np.sum(Xc**2, axis=0))


def standardize(ds: Dataset, mode: str = "unit-variance") -> Dataset:
    """Center y, center each X column and scale it per ``mode``.

    ``mode`` is ``"unit-variance"`` (unit sample standard deviation) or
    ``"unit-l2-norm"``. If ``ds`` was already standardized, the new transform is
    composed with the old one so that :func:`to_original_scale` keeps working.
    """
    if mode not in STANDARDIZE_MODES:
        raise DataError(f"unknown standardization mode {mode!r}; expected one of {STANDARDIZE_MODES}")
    x_center = ds.X.mean(axis=0)
    Xc = ds.X - x_center
    scale = _column_scale(Xc, mode)
    constant = np.flatnonzero(~(scale > 0))
    if constant.size:
        names = [ds.column_names[j] for j in constant]
        raise DataError(f"cannot standardize constant column(s): {names}")
    y_center = float(ds.y.mean())

    prev = ds.standardization
    if prev is not None:
        record = Standardization(
            mode,
            prev.y_center + y_center,
            prev.x_center + prev.x_scale * x_center,
            prev.x_scale * scale,
        )
    else:
        record = Standardization(mode, y_center, x_center, scale)
    return Dataset(Xc / scale, ds.y - y_center, ds.column_names, record)


def to_original_scale(beta, std: Standardization) -> np.ndarray:
    """Map standardized-scale coefficients back to the raw predictor scale."""
    return np.asarray(beta, dtype=float) / std.x_scale


def to_standardized_scale(beta, std: Standardization) -> np.ndarray:
    return np.asarray(beta, dtype=float) * std.x_scale

