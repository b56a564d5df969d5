"""``corrfilter`` command-line entry point.

Exit codes: 0 on success, 2 for usage or configuration problems, 3 when a
computation fails at run time.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bench import run_experiment, run_rmt_curve
from .config import PRESETS, CliConfig, ConfigError
from .errors import CorrFilterError
from .estimators import ESTIMATOR_NAMES, EstimatorSpec, Workspace
from .report import FORMATS, emit_curve, emit_profiles, emit_tables
from .rie import MwcvPlan

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

_EXTENSIONS = {"csv": "csv", "json": "json", "text": "txt"}

log = logging.getLogger("corrfilter")


class UsageError(Exception):
    """Bad input detected before any computation starts."""


def _formats(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in items if t not in FORMATS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"formats must be a comma list drawn from {', '.join(FORMATS)}")
    return items


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON configuration file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="built-in population model")
    parser.add_argument("--p", type=int, help="number of variables")
    parser.add_argument("--n", type=int, help="observations per sample")
    parser.add_argument("--m", type=int, help="number of realizations (at least 2)")
    parser.add_argument("--seed", type=int, help="RNG seed")
    parser.add_argument("--tau", type=float, help="autocorrelation time of the exponential kernel")
    parser.add_argument("--epsilon", type=float, help="regularization for the nonlinear shrinkers")
    parser.add_argument("--standardize", action="store_true", default=None, help="demean and rescale samples")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--format", type=_formats, dest="formats", help="comma list of csv, json, text")
    parser.add_argument("--workers", type=int, help="worker processes (default: all CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrfilter", description="Correlation matrix filtering benchmarks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("benchmark", "loss and stability tables for every estimator"),
        ("curve", "clipping loss as a function of the number of kept eigenvalues"),
        ("diagnose", "rank-wise shrinkage and IPR profiles"),
    ):
        _common(sub.add_parser(name, help=help_text))

    filt = sub.add_parser("filter", help="filter the correlation matrix of a CSV data file")
    filt.add_argument("data", type=Path, help="CSV with a header row; rows are observations")
    filt.add_argument("--estimator", required=True, choices=ESTIMATOR_NAMES)
    filt.add_argument("--q", type=float, help="aspect ratio override (default p/n)")
    filt.add_argument("--tau", type=float, help="autocorrelation time for bj and two-step-ii")
    filt.add_argument("--epsilon", type=float)
    filt.add_argument("--train", type=int, help="mwcv training window length")
    filt.add_argument("--test", type=int, help="mwcv test window length")
    filt.add_argument("--out", type=Path, help="output CSV file (default: standard output)")
    return parser


def _load_config(args: argparse.Namespace) -> CliConfig:
    cfg = CliConfig.load(args.config) if args.config else CliConfig()
    cfg = cfg.with_overrides(
        preset=args.preset,
        p=args.p,
        n=args.n,
        m=args.m,
        seed=args.seed,
        standardize=args.standardize,
        out_dir=str(args.out) if args.out else None,
        formats=args.formats,
        tau=args.tau,
        epsilon=args.epsilon,
    )
    if cfg.m < 2:
        raise UsageError(f"m must be >= 2 (stability needs at least one pair of realizations), got {cfg.m}")
    if cfg.n < 2 or cfg.p < 1:
        raise UsageError(f"need p >= 1 and n >= 2, got p = {cfg.p}, n = {cfg.n}")
    return cfg


def _experiment(args: argparse.Namespace):
    cfg = _load_config(args)
    try:
        return cfg, cfg.experiment(args.workers)
    except CorrFilterError as exc:
        raise UsageError(str(exc)) from None


def _stem(kind: str, cfg: CliConfig) -> str:
    return f"{kind}_{cfg.label}_p{cfg.p}_n{cfg.n}_m{cfg.m}_seed{cfg.seed}"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    print(path)


def cmd_benchmark(args: argparse.Namespace) -> int:
    cfg, exp = _experiment(args)
    report = run_experiment(exp)
    for w in report.warnings:
        log.warning(w)
    for fmt in cfg.formats:
        _write(Path(cfg.out_dir) / f"{_stem('benchmark', cfg)}.{_EXTENSIONS[fmt]}", emit_tables(report, fmt))
    return EXIT_OK


def cmd_curve(args: argparse.Namespace) -> int:
    cfg, exp = _experiment(args)
    curve = run_rmt_curve(exp)
    for fmt in cfg.formats:
        _write(Path(cfg.out_dir) / f"{_stem('curve', cfg)}.{_EXTENSIONS[fmt]}", emit_curve(curve, fmt))
    return EXIT_OK


def cmd_diagnose(args: argparse.Namespace) -> int:
    cfg, exp = _experiment(args)
    report = run_experiment(exp)
    for name in report.estimators:
        _write(Path(cfg.out_dir) / f"{_stem('profile', cfg)}_{name}.csv", emit_profiles(report, name))
    return EXIT_OK


def read_data_matrix(path: Path) -> tuple[list[str], np.ndarray]:
    """Header names and the n x p observation array of a data CSV."""
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise UsageError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = [(line, r) for line, r in enumerate(rows[1:], start=2) if any(cell.strip() for cell in r)]
    data = np.empty((len(body), len(header)))
    for i, (line, row) in enumerate(body):
        if len(row) != len(header):
            raise UsageError(f"{path}: row {line} has {len(row)} cells, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise UsageError(
                    f"{path}: non-numeric cell {cell!r} at row {line}, column {j + 1} ({header[j]})"
                ) from None
            if not math.isfinite(value):
                raise UsageError(f"{path}: non-finite cell at row {line}, column {j + 1} ({header[j]})")
            data[i, j] = value
    if data.shape[0] < 2:
        raise UsageError(f"{path}: need at least 2 observations, got {data.shape[0]}")
    return header, data


def cmd_filter(args: argparse.Namespace) -> int:
    header, data = read_data_matrix(args.data)
    n, p = data.shape
    z = data - data.mean(axis=0)
    sd = z.std(axis=0)
    if np.any(sd == 0):
        constant = [header[j] for j in np.flatnonzero(sd == 0)]
        raise CorrFilterError(f"constant series cannot be standardized: {', '.join(constant)}")
    z /= sd
    e = z.T @ z / n
    e = 0.5 * (e + e.T)
    np.fill_diagonal(e, 1.0)

    params = {}
    if args.estimator in ("lp", "bj", "rmt", "two-step-ii", "two-step-iii") and args.q is not None:
        params["q"] = args.q
    if args.estimator in ("bj", "two-step-ii"):
        params["tau"] = args.tau if args.tau is not None else 3.0
    if args.epsilon is not None and args.estimator in ("lp", "bj", "two-step-ii", "two-step-iii"):
        params["epsilon"] = args.epsilon
    try:
        spec = EstimatorSpec(args.estimator, params)
    except CorrFilterError as exc:
        raise UsageError(str(exc)) from None

    series = plan = None
    if spec.needs_series:
        if args.train is None or args.test is None:
            raise UsageError("mwcv needs --train and --test window lengths")
        if args.train + args.test > n:
            raise UsageError(f"--train + --test = {args.train + args.test} exceeds the {n} observations")
        folds = (n - args.train) // args.test
        total = args.train + folds * args.test
        plan = MwcvPlan(total, args.train, args.test)
        series = z[n - total :].T
    out = Workspace(e, p / n, series=series, plan=plan).apply(spec).filtered

    writer_target = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(writer_target, lineterminator="\r\n")
        writer.writerow(["", *header])
        for name, row in zip(header, out):
            writer.writerow([name, *(format(v, ".17g") for v in row)])
    finally:
        if args.out:
            writer_target.close()
    return EXIT_OK


_COMMANDS = {"benchmark": cmd_benchmark, "curve": cmd_curve, "diagnose": cmd_diagnose, "filter": cmd_filter}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="corrfilter: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"corrfilter: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorrFilterError as exc:
        print(f"corrfilter: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (np.linalg.LinAlgError, FloatingPointError, OSError) as exc:
        print(f"corrfilter: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
