"""Population models, autocorrelation kernels and Gaussian sampling.

Samples follow the multiplicative noise model ``Y = sqrt(C) X sqrt(A)`` with
``E = Y Y' / n``.  Every draw is keyed by ``(seed, realization_index, stream)``
through :class:`numpy.random.SeedSequence` feeding a Philox counter-based
generator, so realizations can be produced in any order or process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from numpy.typing import NDArray
from scipy.sparse.csgraph import connected_components

from .errors import InvalidDimension, InvalidLoading, InvalidParameter
from .linalg import sqrt_spd, sym_eigen

__all__ = [
    "BlockSpec",
    "Exponential",
    "Identity",
    "ModelSpec",
    "PopulationModel",
    "SampleDraw",
    "block_eigenvalues",
    "build_autocorrelation",
    "build_population",
    "connected_blocks",
    "generate_sample",
    "nested_radius_bounds",
    "paper_preset",
    "rng_for",
]

DEFAULT_LOADING = 0.3
DEFAULT_TAU = 3.0

# Layouts at p = 100; other dimensions are rescaled proportionally.
CASE1_SIZES = (3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 12, 13)
NESTED_SUB_SIZES = ((6, 8, 11), (9, 12, 14), (11, 13, 16))


@dataclass(frozen=True)
class Identity:
    kind = "identity"

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "identity"}


@dataclass(frozen=True)
class Exponential:
    """A_ij = exp(-|i - j| / tau)."""

    tau: float
    kind = "exponential"

    def __post_init__(self) -> None:
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise InvalidParameter(f"tau must be positive and finite, got {self.tau}")

    @property
    def eta(self) -> float:
        return 1.0 / math.tanh(1.0 / self.tau)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "exponential", "tau": self.tau}


Autocorrelation = Union[Identity, Exponential]


def autocorr_from_dict(data: dict[str, Any]) -> Autocorrelation:
    kind = data.get("kind", "identity")
    if kind == "identity":
        return Identity()
    if kind == "exponential":
        return Exponential(float(data["tau"]))
    raise InvalidParameter(f"unknown autocorrelation kind {kind!r}")


@dataclass(frozen=True)
class BlockSpec:
    start: int
    size: int
    loading: float = DEFAULT_LOADING

    def to_dict(self) -> dict[str, Any]:
        return {"start": self.start, "size": self.size, "loading": self.loading}


@dataclass(frozen=True)
class ModelSpec:
    p: int
    blocks: tuple[BlockSpec, ...] = ()
    autocorr: Autocorrelation = Identity()
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.p < 1:
            raise InvalidDimension(f"p must be positive, got {self.p}")
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if len(self.blocks) > self.p:
            raise InvalidDimension(f"{len(self.blocks)} blocks exceed p = {self.p}")
        for b in self.blocks:
            if b.start < 0 or b.size < 1 or b.start + b.size > self.p:
                raise InvalidDimension(f"block {b} does not fit in p = {self.p}")
            if not 0.0 <= b.loading <= 1.0:
                raise InvalidLoading(f"loading {b.loading} outside [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "p": self.p,
            "blocks": [b.to_dict() for b in self.blocks],
            "autocorr": self.autocorr.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelSpec":
        return cls(
            p=int(data["p"]),
            blocks=tuple(
                BlockSpec(int(b["start"]), int(b["size"]), float(b.get("loading", DEFAULT_LOADING)))
                for b in data.get("blocks", ())
            ),
            autocorr=autocorr_from_dict(data.get("autocorr", {"kind": "identity"})),
            name=str(data.get("name", "custom")),
        )


def loading_matrix(spec: ModelSpec) -> NDArray[np.float64]:
    loadings = np.zeros((spec.p, len(spec.blocks)))
    for col, b in enumerate(spec.blocks):
        loadings[b.start : b.start + b.size, col] = b.loading
    return loadings


@dataclass
class PopulationModel:
    spec: ModelSpec
    C: NDArray[np.float64]
    _sqrt_c: NDArray[np.float64] | None = field(default=None, repr=False, compare=False)
    _sqrt_a: dict[int, NDArray[np.float64]] = field(default_factory=dict, repr=False, compare=False)

    @property
    def p(self) -> int:
        return self.spec.p

    @property
    def sqrt_c(self) -> NDArray[np.float64]:
        if self._sqrt_c is None:
            self._sqrt_c = sqrt_spd(self.C)
        return self._sqrt_c

    def autocorrelation(self, n: int) -> NDArray[np.float64]:
        return build_autocorrelation(self.spec.autocorr, n)

    def sqrt_a(self, n: int) -> NDArray[np.float64] | None:
        """Cached sqrt(A) for length ``n``; ``None`` for white noise."""
        if isinstance(self.spec.autocorr, Identity):
            return None
        if n not in self._sqrt_a:
            self._sqrt_a[n] = sqrt_spd(self.autocorrelation(n))
        return self._sqrt_a[n]


def build_population(spec: ModelSpec) -> PopulationModel:
    """C = I + offdiag(L L') for the block loading matrix L."""
    loadings = loading_matrix(spec)
    c = loadings @ loadings.T
    np.fill_diagonal(c, 1.0)
    off = c - np.eye(spec.p)
    if spec.p > 1 and np.max(np.abs(off)) >= 1.0:
        raise InvalidLoading("overlapping blocks give an off-diagonal entry >= 1")
    w = np.linalg.eigvalsh(c)
    if w[0] < -1e-10:
        raise InvalidLoading(f"population matrix is indefinite (min eigenvalue {w[0]:.3e})")
    return PopulationModel(spec=spec, C=c)


def _scale_sizes(base: list[int], total: int) -> list[int]:
    """Proportionally rescale block sizes to sum to ``total`` keeping each >= 1."""
    if total < len(base):
        raise InvalidDimension(f"p = {total} cannot hold {len(base)} blocks")
    raw = np.asarray(base, dtype=float) * total / sum(base)
    sizes = np.maximum(np.floor(raw).astype(int), 1)
    remainder = raw - np.floor(raw)
    while sizes.sum() < total:
        i = int(np.argmax(remainder))
        sizes[i] += 1
        remainder[i] = -1.0
    while sizes.sum() > total:
        candidates = np.where(sizes > 1, sizes - raw, -np.inf)
        sizes[int(np.argmax(candidates))] -= 1
    return [int(s) for s in sizes]


def paper_preset(case: int, p: int = 100, *, loading: float = DEFAULT_LOADING, tau: float = DEFAULT_TAU) -> ModelSpec:
    """Block-diagonal (case 1) or hierarchically nested (cases 2, 3) layouts.

    Case 3 is the nested layout with exponentially decaying autocorrelation.
    """
    if case not in (1, 2, 3):
        raise InvalidParameter(f"case must be 1, 2 or 3, got {case}")
    blocks: list[BlockSpec] = []
    if case == 1:
        start = 0
        for size in _scale_sizes(list(CASE1_SIZES), p):
            blocks.append(BlockSpec(start, size, loading))
            start += size
        return ModelSpec(p=p, blocks=tuple(blocks), name="case1")

    flat = [s for group in NESTED_SUB_SIZES for s in group]
    scaled = iter(_scale_sizes(flat, p))
    start = 0
    for group in NESTED_SUB_SIZES:
        subs = [next(scaled) for _ in group]
        blocks.append(BlockSpec(start, sum(subs), loading))
        for size in subs:
            blocks.append(BlockSpec(start, size, loading))
            start += size
    autocorr: Autocorrelation = Exponential(tau) if case == 3 else Identity()
    return ModelSpec(p=p, blocks=tuple(blocks), autocorr=autocorr, name=f"case{case}")


def build_autocorrelation(kind: Autocorrelation, n: int) -> NDArray[np.float64]:
    if n < 1:
        raise InvalidParameter(f"n must be positive, got {n}")
    if isinstance(kind, Identity):
        return np.eye(n)
    lag = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return np.exp(-lag / kind.tau)


@dataclass(frozen=True)
class SampleDraw:
    Y: NDArray[np.float64]
    E: NDArray[np.float64]
    seed: int
    realization_index: int


def rng_for(seed: int, realization_index: int, stream: int = 0) -> np.random.Generator:
    """Independent substream for one realization (``stream`` separates uses within it)."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(realization_index), int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def generate_sample(
    model: PopulationModel,
    n: int,
    seed: int,
    realization_index: int,
    *,
    standardize: bool = False,
    stream: int = 0,
) -> SampleDraw:
    """Draw Y = sqrt(C) X sqrt(A) and E = Y Y' / n.

    ``standardize`` demeans each row of Y and scales it to unit variance
    first, which turns E into the sample correlation matrix.
    """
    if n < 1:
        raise InvalidParameter(f"n must be positive, got {n}")
    rng = rng_for(seed, realization_index, stream)
    x = rng.standard_normal((model.p, n))
    y = model.sqrt_c @ x
    root_a = model.sqrt_a(n)
    if root_a is not None:
        y = y @ root_a
    if standardize:
        y = y - y.mean(axis=1, keepdims=True)
        sd = y.std(axis=1, keepdims=True)
        y = y / np.where(sd > 0, sd, 1.0)
    e = y @ y.T / n
    e = 0.5 * (e + e.T)
    return SampleDraw(Y=y, E=e, seed=seed, realization_index=realization_index)


def block_eigenvalues(a: float, p_l: int) -> tuple[float, float]:
    """Top eigenvalue and (p_l - 1)-fold bulk eigenvalue of a homogeneous block."""
    return 1.0 + a * (p_l - 1), 1.0 - a


def nested_radius_bounds(a: float, p_k: int) -> tuple[float, float]:
    """Row-sum bounds on the spectral radius of a nested component of size p_k."""
    return 1.0 + (p_k - 1) * a, 1.0 + p_k * (p_k - 1) * a


def connected_blocks(c: NDArray[np.float64]) -> list[NDArray[np.intp]]:
    """Index sets of the independent (connected) components of a correlation matrix."""
    adjacency = (np.abs(c) > 0).astype(np.int8)
    np.fill_diagonal(adjacency, 0)
    count, labels = connected_components(adjacency, directed=False)
    return [np.flatnonzero(labels == k) for k in range(count)]


def population_spectrum(model: PopulationModel) -> NDArray[np.float64]:
    return sym_eigen(model.C).eigenvalues
