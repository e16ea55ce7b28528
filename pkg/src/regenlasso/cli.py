"""Command-line interface.

    regenlasso run      CONFIG [--set key=value ...]
    regenlasso tune     CONFIG ...   # stop after the alpha profile
    regenlasso eb       CONFIG ...   # empirical Bayes only
    regenlasso validate CONFIG ...

Exit codes: 0 ok, 2 configuration error, 3 too few regenerations, 1 other.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import OUTPUT_DIR_ENV, ConfigError, load_config, validate_config
from .data import DataError
from .pipeline import StageError, run_pipeline
from .regeneration import InsufficientRegenerations

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_REGEN = 0, 1, 2, 3

log = logging.getLogger("regenlasso")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regenlasso", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "full pipeline and report"),
        ("tune", "stop after the alpha grid search"),
        ("eb", "empirical Bayes estimate of (lambda, sigma2) only"),
        ("validate", "check a configuration without running"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", nargs="?", help="flat key = value config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", help=f"output directory (default: ${OUTPUT_DIR_ENV} or ./regenlasso-out)")
    return parser


def _overrides(args) -> list[str]:
    extra = list(args.overrides)
    if args.seed is not None:
        extra.append(f"seed={args.seed}")
    if args.output_dir:
        extra.append(f"output_dir={args.output_dir}")
    return extra


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    findings = validate_config(cfg)
    for level, msg in findings:
        print(f"{level}: {msg}", file=sys.stderr)
    if any(level == "error" for level, _ in findings):
        return EXIT_CONFIG
    if args.command == "validate":
        print("config ok")
        return EXIT_OK

    stop = {"run": "report", "tune": "tune", "eb": "eb"}[args.command]
    try:
        result = run_pipeline(cfg, stop_after=stop)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, InsufficientRegenerations):
            return EXIT_REGEN
        if isinstance(exc.cause, (DataError, ConfigError)):
            return EXIT_CONFIG
        return EXIT_FAIL

    hp = result.hyper
    print(f"lambda = {hp.lam:.6g}  sigma = {hp.sigma:.6g}")
    if result.alpha is not None:
        best = "" if result.profile is None else f"  (mean psi {result.profile.mean_psi.max():.4g})"
        print(f"alpha* = {result.alpha:.4g}{best}")
    if result.report is not None:
        r = result.report
        print(f"regenerations = {result.trace.n_regenerations}  tours = {r.n_tours}")
        print(f"eta = {r.eta:.6g}  burn-in({r.epsilon:g}) = {r.burnin}  AR(1) burn-in = {r.ar1_burnin}")
    for key, path in result.files.items():
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
