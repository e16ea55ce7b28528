from pathlib import Path

import numpy as np
import pytest

from regenlasso import Dataset, Hyperparams

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
DATA = ROOT / "data"

# filled by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_dataset(n=40, p=3, seed=0, noise=1.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    beta = np.linspace(1.5, -1.0, p)
    y = X @ beta + noise * rng.normal(size=n)
    X = X - X.mean(axis=0)
    return Dataset(X, y - y.mean(), tuple(f"x{j + 1}" for j in range(p)))


@pytest.fixture
def small_ds():
    return make_dataset()


@pytest.fixture
def small_hp():
    return Hyperparams(2.0, 1.0)


@pytest.fixture
def synthetic_csv(tmp_path):
    """A 60 x 2 CSV with response column ``y``."""
    rng = np.random.default_rng(11)
    X = rng.normal(size=(60, 2))
    y = 2.0 * X[:, 0] - X[:, 1] + 0.5 * rng.normal(size=60)
    path = tmp_path / "synthetic.csv"
    lines = ["a,b,y"] + [f"{r[0]:.17g},{r[1]:.17g},{v:.17g}" for r, v in zip(X, y)]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def synthetic_cfg(tmp_path, synthetic_csv):
    path = tmp_path / "synthetic.cfg"
    path.write_text(
        "\n".join(
            [
                f"data = {synthetic_csv.name}",
                "response = y",
                "standardize = unit-variance",
                "lam = 1.0",
                "sigma = 0.5",
                "t = 600",
                "pilot_length = 300",
                "pilot_discard = 50",
                "alpha_grid = geom:0.01:0.3:8",
                "seed = 5",
                f"output_dir = {tmp_path / 'out'}",
            ]
        )
        + "\n"
    )
    return path
