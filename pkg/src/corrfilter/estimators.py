"""Named estimator descriptors used by the benchmark harness and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from . import hce, rie
from .errors import InvalidParameter
from .linalg import sym_eigen

__all__ = ["ESTIMATOR_NAMES", "EstimateOutput", "EstimatorSpec", "Workspace", "default_estimators"]

LABELS = {
    "naive": "naive",
    "rmt": "RMT",
    "alca": "ALCA",
    "lp": "LP",
    "bj": "BJ",
    "mwcv": "mwcv",
    "two-step-i": "2-step (I)",
    "two-step-ii": "2-step (II)",
    "two-step-iii": "2-step (III)",
}
ESTIMATOR_NAMES = tuple(LABELS)
FIRST_STEP = {"two-step-i": "mwcv", "two-step-ii": "bj", "two-step-iii": "lp"}
NEEDS_SERIES = {"mwcv", "two-step-i"}

_ALLOWED_PARAMS = {
    "naive": set(),
    "rmt": {"q"},
    "alca": set(),
    "lp": {"q", "epsilon", "bandwidth", "exclude_self"},
    "bj": {"q", "tau", "epsilon", "bandwidth", "exclude_self"},
    "mwcv": set(),
}


@dataclass(frozen=True)
class EstimatorSpec:
    name: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        name = self.name.strip().lower().replace("_", "-")
        if name not in LABELS:
            raise InvalidParameter(f"unknown estimator {self.name!r}; choose from {', '.join(ESTIMATOR_NAMES)}")
        object.__setattr__(self, "name", name)
        allowed = _ALLOWED_PARAMS.get(FIRST_STEP.get(name, name), set())
        unknown = set(self.params) - allowed
        if unknown:
            raise InvalidParameter(f"estimator {name!r} does not accept {sorted(unknown)}")
        if "bandwidth" in self.params and self.params["bandwidth"] not in ("relative", "absolute"):
            raise InvalidParameter("bandwidth must be 'relative' or 'absolute'")

    @property
    def label(self) -> str:
        return LABELS[self.name]

    @property
    def needs_series(self) -> bool:
        return self.name in NEEDS_SERIES

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "params": dict(self.params)}


def default_estimators(autocorrelated: bool, tau: float = 3.0) -> list[EstimatorSpec]:
    """The single-step and two-step line-up; BJ variants only for autocorrelated data."""
    names = ["naive", "rmt", "alca", "lp"]
    if autocorrelated:
        names.append("bj")
    names += ["mwcv", "two-step-i"]
    if autocorrelated:
        names.append("two-step-ii")
    names.append("two-step-iii")
    return [EstimatorSpec(n, {"tau": tau} if n in ("bj", "two-step-ii") else {}) for n in names]


@dataclass(frozen=True)
class EstimateOutput:
    """Filtered matrix plus the (lambda, xi) pairing used for shrinkage profiles.

    For RIE outputs ``xi`` is paired with ascending ``lam``; for clustering
    outputs ``xi`` is the ascending spectrum of ``filtered``.  ``vectors``
    holds the estimator's own eigenbasis ordered by ascending eigenvalue of
    ``filtered``: the sample eigenvectors for an RIE, so that flattened
    (degenerate) levels keep a meaningful basis.
    """

    filtered: NDArray[np.float64]
    lam: NDArray[np.float64]
    xi: NDArray[np.float64]
    vectors: NDArray[np.float64]
    clamped: int = 0


class Workspace:
    """Applies estimators to one sample, sharing first-step results between them."""

    def __init__(
        self,
        E: NDArray[np.float64],
        q: float,
        *,
        series: NDArray[np.float64] | None = None,
        plan: rie.MwcvPlan | None = None,
    ):
        self.E = E
        self.q = q
        self.series = series
        self.plan = plan
        self._cache: dict[tuple, EstimateOutput] = {}
        self._lam: NDArray[np.float64] | None = None

    @property
    def sample_eigenvalues(self) -> NDArray[np.float64]:
        if self._lam is None:
            self._lam = sym_eigen(self.E).eigenvalues
        return self._lam

    def apply(self, spec: EstimatorSpec) -> EstimateOutput:
        key = (spec.name, tuple(sorted(spec.params.items())))
        if key not in self._cache:
            self._cache[key] = self._compute(spec)
        return self._cache[key]

    def _shrink(self, name: str, params: dict[str, Any]) -> rie.ShrinkageResult:
        q = float(params.get("q", self.q))
        opts = {k: params[k] for k in ("bandwidth", "exclude_self") if k in params}
        if name == "naive":
            return rie.naive(self.E)
        if name == "rmt":
            return rie.clip_rmt(self.E, q)
        if name == "lp":
            return rie.lp_shrink(self.E, q, params.get("epsilon"), **opts)
        if name == "bj":
            return rie.bj_shrink(self.E, q, params.get("tau"), params.get("epsilon"), **opts)
        if name == "mwcv":
            if self.series is None or self.plan is None:
                raise InvalidParameter("mwcv needs a series and a window plan")
            return rie.mwcv_shrink(self.series, self.plan)
        raise InvalidParameter(f"{name!r} is not a rotationally invariant estimator")

    def _compute(self, spec: EstimatorSpec) -> EstimateOutput:
        if spec.name == "alca":
            filtered = hce.two_step(self.E, lambda e: e)
            dec = sym_eigen(filtered)
            return EstimateOutput(filtered, self.sample_eigenvalues, dec.eigenvalues, dec.eigenvectors)
        if spec.name in FIRST_STEP:
            first = self.apply(EstimatorSpec(FIRST_STEP[spec.name], spec.params))
            filtered = hce.two_step(first.filtered, lambda r: r)
            dec = sym_eigen(filtered)
            return EstimateOutput(filtered, first.lam, dec.eigenvalues, dec.eigenvectors, first.clamped)
        res = self._shrink(spec.name, spec.params)
        order = np.argsort(res.xi, kind="stable")
        return EstimateOutput(res.filtered, res.eigenvalues, res.xi, res.decomp.eigenvectors[:, order], res.clamped)
