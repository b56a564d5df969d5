"""Benchmark report containers and their CSV / JSON / text renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

__all__ = ["BenchReport", "Cell", "CurveReport", "Profile", "emit_curve", "emit_profiles", "emit_tables"]

FORMATS = ("csv", "json", "text")


@dataclass
class Cell:
    """Statistics of one (estimator, loss) pair."""

    mean_vs_population: float
    std_vs_population: float
    count_vs_population: int
    failed_vs_population: int
    mean_stability: float
    std_stability: float
    count_stability: int
    failed_stability: int

    @property
    def se_vs_population(self) -> float:
        return self.std_vs_population / math.sqrt(max(self.count_vs_population, 1))

    @property
    def se_stability(self) -> float:
        return self.std_stability / math.sqrt(max(self.count_stability, 1))


@dataclass
class Profile:
    """Rank-wise means and standard deviations, rank 1 = smallest eigenvalue."""

    lam_mean: list[float]
    lam_std: list[float]
    xi_mean: list[float]
    xi_std: list[float]
    ipr_mean: list[float]
    ipr_std: list[float]


@dataclass
class BenchReport:
    estimators: list[str]
    losses: list[str]
    cells: dict[str, dict[str, Cell]]
    profiles: dict[str, Profile] = field(default_factory=dict)
    population_eigenvalues: list[float] = field(default_factory=list)
    population_ipr: list[float] = field(default_factory=list)
    clamped: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def cell(self, estimator: str, loss: str) -> Cell:
        return self.cells[estimator][loss]

    def numeric_cells(self) -> dict[tuple[str, str, str], float]:
        """Flat view of every statistic, for determinism comparisons."""
        out = {}
        for est, row in self.cells.items():
            for loss, c in row.items():
                for key, value in asdict(c).items():
                    out[(est, loss, key)] = float(value)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "estimators": list(self.estimators),
            "losses": list(self.losses),
            "cells": {e: {l: asdict(c) for l, c in row.items()} for e, row in self.cells.items()},
            "profiles": {e: asdict(p) for e, p in self.profiles.items()},
            "population_eigenvalues": list(self.population_eigenvalues),
            "population_ipr": list(self.population_ipr),
            "clamped": dict(self.clamped),
            "warnings": list(self.warnings),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BenchReport":
        return cls(
            estimators=list(data["estimators"]),
            losses=list(data["losses"]),
            cells={e: {l: Cell(**c) for l, c in row.items()} for e, row in data["cells"].items()},
            profiles={e: Profile(**p) for e, p in data.get("profiles", {}).items()},
            population_eigenvalues=list(data.get("population_eigenvalues", [])),
            population_ipr=list(data.get("population_ipr", [])),
            clamped=dict(data.get("clamped", {})),
            warnings=list(data.get("warnings", [])),
            metadata=dict(data.get("metadata", {})),
        )


@dataclass
class CurveReport:
    """Clipping estimator keeping the k largest eigenvalues, for k = 1..p."""

    p: int
    losses: list[str]
    mean_vs_population: dict[str, list[float]]
    std_vs_population: dict[str, list[float]]
    mean_stability: dict[str, list[float]]
    std_stability: dict[str, list[float]]
    metadata: dict[str, Any] = field(default_factory=dict)

    def argmin(self, loss: str) -> int:
        """k (1-based) minimising the mean loss against the population."""
        return int(np.nanargmin(self.mean_vs_population[loss])) + 1

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CurveReport":
        return cls(**data)


def _fmt(x: float) -> str:
    return format(x, ".17g")


def column_minima(report: BenchReport, table: str) -> dict[str, set[str]]:
    """Estimators attaining each loss column's minimum (NaN cells never win)."""
    key = "mean_vs_population" if table == "population" else "mean_stability"
    best: dict[str, set[str]] = {}
    for loss in report.losses:
        values = {e: getattr(report.cell(e, loss), key) for e in report.estimators}
        finite = {e: v for e, v in values.items() if math.isfinite(v)}
        if finite:
            low = min(finite.values())
            best[loss] = {e for e, v in finite.items() if v == low}
        else:
            best[loss] = set()
    return best


def emit_tables(report: BenchReport, fmt: str = "csv") -> str:
    """Render the population and stability tables, marking per-loss minima."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2)
    tables = ("population", "stability")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["table", "estimator", *report.losses, "best"])
        for table in tables:
            key = "mean_vs_population" if table == "population" else "mean_stability"
            minima = column_minima(report, table)
            for est in report.estimators:
                values = [_fmt(getattr(report.cell(est, l), key)) for l in report.losses]
                marks = ";".join(l for l in report.losses if est in minima[l])
                writer.writerow([table, est, *values, marks])
        return buf.getvalue()
    if fmt == "text":
        lines = []
        width = max([len(e) for e in report.estimators] + [9])
        for table in tables:
            key = "mean_vs_population" if table == "population" else "mean_stability"
            title = "<L(C, Xi)>" if table == "population" else "<L(Xi_i, Xi_j)>"
            minima = column_minima(report, table)
            lines.append(title)
            lines.append(" ".join([" " * width] + [f"{l:>18s}" for l in report.losses]))
            for est in report.estimators:
                row = []
                for l in report.losses:
                    mark = "*" if est in minima[l] else " "
                    row.append(f"{getattr(report.cell(est, l), key):17.6f}{mark}")
                lines.append(" ".join([f"{est:<{width}s}"] + row))
            lines.append("")
        lines.extend(f"warning: {w}" for w in report.warnings)
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")


def emit_curve(curve: CurveReport, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps(curve.to_dict(), indent=2)
    rows = []
    for loss in curve.losses:
        for k in range(curve.p):
            rows.append(
                [
                    loss,
                    k + 1,
                    curve.mean_vs_population[loss][k],
                    curve.std_vs_population[loss][k],
                    curve.mean_stability[loss][k],
                    curve.std_stability[loss][k],
                ]
            )
    header = ["loss", "k", "mean_vs_population", "std_vs_population", "mean_stability", "std_stability"]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow([r[0], r[1], *map(_fmt, r[2:])])
        return buf.getvalue()
    if fmt == "text":
        lines = ["  ".join(f"{h:>18s}" for h in header)]
        lines += ["  ".join([f"{r[0]:>18s}", f"{r[1]:>18d}", *(f"{v:18.6f}" for v in r[2:])]) for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")


def emit_profiles(report: BenchReport, estimator: str) -> str:
    """Rank-wise CSV of shrinkage and IPR profiles with population reference columns."""
    prof = report.profiles[estimator]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(
        ["rank", "lambda_mean", "lambda_std", "xi_mean", "xi_std", "population_eigenvalue",
         "ipr_mean", "ipr_std", "population_ipr"]
    )
    for r in range(len(prof.xi_mean)):
        writer.writerow(
            [r + 1]
            + [
                _fmt(v)
                for v in (
                    prof.lam_mean[r],
                    prof.lam_std[r],
                    prof.xi_mean[r],
                    prof.xi_std[r],
                    report.population_eigenvalues[r],
                    prof.ipr_mean[r],
                    prof.ipr_std[r],
                    report.population_ipr[r],
                )
            ]
        )
    return buf.getvalue()
