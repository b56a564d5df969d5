"""Monte Carlo benchmark driver.

Realizations are grouped in disjoint consecutive pairs ``(2t, 2t + 1)``.
Each pair is one work unit: both members are scored against the population
matrix and against each other (stability).  Units only depend on
``(seed, realization index)``, and results are reduced in unit order, so
the numbers do not depend on the worker count.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from . import __version__
from .estimators import EstimatorSpec, Workspace, default_estimators
from .errors import InvalidParameter
from .linalg import sym_eigen
from .losses import ALL_LOSSES, LossKind, Spectrum, evaluate_many
from .models import Exponential, ModelSpec, PopulationModel, build_population, generate_sample, paper_preset
from .report import BenchReport, Cell, CurveReport, Profile
from .rie import MwcvPlan

__all__ = [
    "ExperimentConfig",
    "ipr_profile",
    "run_experiment",
    "run_rmt_curve",
    "shrinkage_profile",
    "worker_count",
]

log = logging.getLogger(__name__)

LOW_PAIR_COUNT = 5
# "disjoint": realizations (2t, 2t + 1); "all": every i < j, O(m^2) loss evaluations
PAIRINGS = ("disjoint", "all")
SERIES_STREAM = 1


def worker_count(requested: int | None = None) -> int:
    """Requested workers (0 or None meaning all CPUs), capped by ``CORRFILTER_THREADS``."""
    cap = os.environ.get("CORRFILTER_THREADS")
    n = requested if requested else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


@dataclass
class ExperimentConfig:
    model: ModelSpec
    n: int
    m: int
    seed: int = 0
    estimators: list[EstimatorSpec] = field(default_factory=list)
    losses: list[LossKind] = field(default_factory=lambda: list(ALL_LOSSES))
    standardize: bool = False
    workers: int = 1
    mwcv_multiplier: int = 10
    mwcv_test: int | None = None
    profiles: bool = True
    pairing: str = "disjoint"

    def __post_init__(self) -> None:
        if self.m < 2:
            raise InvalidParameter(f"m must be >= 2 so stability has at least one pair, got {self.m}")
        if self.n < 2:
            raise InvalidParameter(f"n must be >= 2, got {self.n}")
        if self.pairing not in PAIRINGS:
            raise InvalidParameter(f"pairing must be one of {PAIRINGS}, got {self.pairing!r}")
        if not self.estimators:
            autocorrelated = isinstance(self.model.autocorr, Exponential)
            tau = self.model.autocorr.tau if autocorrelated else 3.0
            self.estimators = default_estimators(autocorrelated, tau)
        self.losses = [LossKind.parse(l) for l in self.losses]
        names = [e.name for e in self.estimators]
        if len(set(names)) != len(names):
            raise InvalidParameter("estimator names must be unique within one experiment")
        if any(e.needs_series for e in self.estimators):
            self.plan  # validates the window geometry

    @classmethod
    def preset(cls, case: int, p: int, n: int, m: int, seed: int = 0, **kwargs: Any) -> "ExperimentConfig":
        return cls(model=paper_preset(case, p), n=n, m=m, seed=seed, **kwargs)

    @property
    def p(self) -> int:
        return self.model.p

    @property
    def q(self) -> float:
        return self.p / self.n

    @property
    def plan(self) -> MwcvPlan:
        return MwcvPlan.paper(self.n, self.mwcv_multiplier, self.mwcv_test)

    def echo(self) -> dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "p": self.p,
            "n": self.n,
            "m": self.m,
            "seed": self.seed,
            "estimators": [e.to_dict() for e in self.estimators],
            "losses": [l.value for l in self.losses],
            "standardize": self.standardize,
            "pairing": self.pairing,
            "mwcv": {"T_total_multiplier": self.mwcv_multiplier, "T_out": self.mwcv_test},
        }


def _workspace(config: ExperimentConfig, model: PopulationModel, index: int) -> Workspace:
    draw = generate_sample(model, config.n, config.seed, index, standardize=config.standardize)
    series = plan = None
    if any(e.needs_series for e in config.estimators):
        plan = config.plan
        series = generate_sample(
            model, plan.T_total, config.seed, index, standardize=config.standardize, stream=SERIES_STREAM
        ).Y
    return Workspace(draw.E, config.q, series=series, plan=plan)


def _ipr_columns(v: np.ndarray) -> np.ndarray:
    return np.sum(v**4, axis=0)


def _run_unit(args: tuple[ExperimentConfig, PopulationModel, int]) -> dict[str, Any]:
    config, model, unit = args
    c_spec = Spectrum(model.C)
    indices = [i for i in (2 * unit, 2 * unit + 1) if i < config.m]
    kinds = config.losses
    vs_pop: dict[str, list[list[float]]] = {e.name: [] for e in config.estimators}
    shapes: dict[str, list[tuple[np.ndarray, np.ndarray, np.ndarray]]] = {e.name: [] for e in config.estimators}
    clamped = {e.name: 0 for e in config.estimators}
    spectra: dict[str, list[Spectrum]] = {e.name: [] for e in config.estimators}
    for index in indices:
        ws = _workspace(config, model, index)
        for est in config.estimators:
            out = ws.apply(est)
            f_spec = Spectrum(out.filtered)
            losses = evaluate_many(c_spec, f_spec, kinds)
            vs_pop[est.name].append([losses[k] for k in kinds])
            spectra[est.name].append(f_spec)
            clamped[est.name] += out.clamped
            if config.profiles:
                shapes[est.name].append((out.lam, out.xi, _ipr_columns(out.vectors)))
    stability: dict[str, list[float] | None] = {}
    for est in config.estimators:
        pair = spectra[est.name]
        if len(pair) == 2:
            losses = evaluate_many(pair[0], pair[1], kinds)
            stability[est.name] = [losses[k] for k in kinds]
        else:
            stability[est.name] = None
    kept = {name: [s.matrix for s in pair] for name, pair in spectra.items()} if config.pairing == "all" else None
    return {"vs_pop": vs_pop, "stability": stability, "shapes": shapes, "clamped": clamped, "filtered": kept}


def _all_pairs(results: list[dict[str, Any]], name: str, kinds: list[LossKind]) -> list[list[float]]:
    spectra = [Spectrum(m) for r in results for m in r["filtered"][name]]
    rows = []
    for i in range(len(spectra)):
        for j in range(i + 1, len(spectra)):
            losses = evaluate_many(spectra[i], spectra[j], kinds)
            rows.append([losses[k] for k in kinds])
    return rows


def _stats(values: Sequence[float]) -> tuple[float, float, int, int]:
    arr = np.asarray(values, dtype=float)
    ok = arr[np.isfinite(arr)]
    failed = int(arr.size - ok.size)
    if ok.size == 0:
        return math.nan, math.nan, 0, failed
    std = float(np.std(ok, ddof=1)) if ok.size > 1 else 0.0
    return float(np.mean(ok)), std, int(ok.size), failed


def _map_units(config: ExperimentConfig, model: PopulationModel, func) -> list[Any]:
    units = [(config, model, u) for u in range((config.m + 1) // 2)]
    workers = worker_count(config.workers)
    if workers == 1 or len(units) == 1:
        return [func(u) for u in units]
    # warm caches once so children inherit them instead of recomputing
    model.sqrt_c
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, units, chunksize=max(1, len(units) // (4 * workers))))


def run_experiment(config: ExperimentConfig) -> BenchReport:
    """Score every estimator against the population and across realization pairs."""
    started = time.perf_counter()
    model = build_population(config.model)
    results = _map_units(config, model, _run_unit)

    names = [e.name for e in config.estimators]
    kinds = config.losses
    cells: dict[str, dict[str, Cell]] = {}
    for name in names:
        pop_rows = [row for r in results for row in r["vs_pop"][name]]
        if config.pairing == "all":
            stab_rows = _all_pairs(results, name, kinds)
        else:
            stab_rows = [r["stability"][name] for r in results if r["stability"][name] is not None]
        row_cells = {}
        for j, kind in enumerate(kinds):
            mp, sp, cp, fp = _stats([r[j] for r in pop_rows])
            ms, ss, cs, fs = _stats([r[j] for r in stab_rows])
            row_cells[kind.value] = Cell(mp, sp, cp, fp, ms, ss, cs, fs)
        cells[name] = row_cells

    warnings = []
    pairs = config.m // 2 if config.pairing == "disjoint" else config.m * (config.m - 1) // 2
    if pairs < LOW_PAIR_COUNT:
        warnings.append(f"stability estimated from only {pairs} realization pair(s)")
    for name in names:
        for kind, c in cells[name].items():
            if c.failed_vs_population or c.failed_stability:
                warnings.append(
                    f"{name}/{kind}: {c.failed_vs_population} population and "
                    f"{c.failed_stability} stability evaluations failed (singular matrix)"
                )
    clamped = {name: sum(r["clamped"][name] for r in results) for name in names}

    profiles = {}
    pop = sym_eigen(model.C)
    if config.profiles:
        for name in names:
            shapes = [s for r in results for s in r["shapes"][name]]
            lam = np.array([s[0] for s in shapes])
            xi = np.array([s[1] for s in shapes])
            ipr = np.array([s[2] for s in shapes])
            profiles[name] = Profile(
                lam_mean=lam.mean(axis=0).tolist(),
                lam_std=lam.std(axis=0).tolist(),
                xi_mean=xi.mean(axis=0).tolist(),
                xi_std=xi.std(axis=0).tolist(),
                ipr_mean=ipr.mean(axis=0).tolist(),
                ipr_std=ipr.std(axis=0).tolist(),
            )

    return BenchReport(
        estimators=names,
        losses=[k.value for k in kinds],
        cells=cells,
        profiles=profiles,
        population_eigenvalues=pop.eigenvalues.tolist(),
        population_ipr=_ipr_columns(pop.eigenvectors).tolist(),
        clamped=clamped,
        warnings=warnings,
        metadata={
            "config": config.echo(),
            "wall_time_s": time.perf_counter() - started,
            "version": __version__,
        },
    )


def _clip_spectra(w: np.ndarray, v: np.ndarray) -> list[Spectrum]:
    """Spectra of the clipping estimator for k = 1..p from one decomposition."""
    p = w.size
    csum = np.cumsum(w)
    out = []
    for k in range(1, p + 1):
        xi = w.copy()
        rest = p - k
        if rest:
            xi[:rest] = csum[rest - 1] / rest
        out.append(Spectrum.from_decomposition(xi, v))
    return out


def _run_curve_unit(args: tuple[ExperimentConfig, PopulationModel, int]) -> dict[str, Any]:
    config, model, unit = args
    c_spec = Spectrum(model.C)
    kinds = config.losses
    indices = [i for i in (2 * unit, 2 * unit + 1) if i < config.m]
    per_real = []
    vs_pop = []
    for index in indices:
        draw = generate_sample(model, config.n, config.seed, index, standardize=config.standardize)
        dec = sym_eigen(draw.E)
        spectra = _clip_spectra(dec.eigenvalues, dec.eigenvectors)
        spectra[-1] = Spectrum(draw.E)
        per_real.append(spectra)
        vs_pop.append(np.array([[evaluate_many(c_spec, s, kinds)[k] for k in kinds] for s in spectra]))
    stability = None
    if len(per_real) == 2:
        stability = np.array(
            [[evaluate_many(a, b, kinds)[k] for k in kinds] for a, b in zip(per_real[0], per_real[1])]
        )
    return {"vs_pop": vs_pop, "stability": stability}


def run_rmt_curve(config: ExperimentConfig) -> CurveReport:
    """Loss and stability of eigenvalue clipping for every number of kept eigenvalues."""
    model = build_population(config.model)
    results = _map_units(config, model, _run_curve_unit)
    pop = np.stack([a for r in results for a in r["vs_pop"]])  # (m, p, losses)
    stab_list = [r["stability"] for r in results if r["stability"] is not None]
    stab = np.stack(stab_list)
    kinds = config.losses

    def reduce(arr: np.ndarray, j: int) -> tuple[list[float], list[float]]:
        means, stds = [], []
        for k in range(config.p):
            mean, std, _, _ = _stats(arr[:, k, j])
            means.append(mean)
            stds.append(std)
        return means, stds

    out: dict[str, dict[str, list[float]]] = {"mp": {}, "sp": {}, "ms": {}, "ss": {}}
    for j, kind in enumerate(kinds):
        out["mp"][kind.value], out["sp"][kind.value] = reduce(pop, j)
        out["ms"][kind.value], out["ss"][kind.value] = reduce(stab, j)
    return CurveReport(
        p=config.p,
        losses=[k.value for k in kinds],
        mean_vs_population=out["mp"],
        std_vs_population=out["sp"],
        mean_stability=out["ms"],
        std_stability=out["ss"],
        metadata={"config": config.echo(), "version": __version__},
    )


def shrinkage_profile(config: ExperimentConfig, estimator: EstimatorSpec) -> dict[str, list[float]]:
    """Rank-wise mean sample eigenvalue and shrunk eigenvalue, with the population reference."""
    report = run_experiment(replace(config, estimators=[estimator], profiles=True))
    prof = report.profiles[estimator.name]
    return {
        "lam_mean": prof.lam_mean,
        "lam_std": prof.lam_std,
        "xi_mean": prof.xi_mean,
        "xi_std": prof.xi_std,
        "population": report.population_eigenvalues,
    }


def ipr_profile(config: ExperimentConfig, estimator: EstimatorSpec) -> dict[str, list[float]]:
    """Rank-wise mean IPR of the filtered matrices' eigenvectors, with the population reference."""
    report = run_experiment(replace(config, estimators=[estimator], profiles=True))
    prof = report.profiles[estimator.name]
    return {"ipr_mean": prof.ipr_mean, "ipr_std": prof.ipr_std, "population": report.population_ipr}
