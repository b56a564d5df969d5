"""Average-linkage hierarchical clustering filter and two-step estimators."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateFirstStep, InvalidCorrelation, InvalidMatrix
from .rie import ShrinkageResult

__all__ = [
    "Dendrogram",
    "Merge",
    "alca_filter",
    "average_linkage",
    "cophenetic",
    "dissimilarity",
    "to_unit_diagonal",
    "two_step",
]


@dataclass(frozen=True)
class Merge:
    a: int
    b: int
    height: float
    new_id: int
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merge list in scipy id convention: leaves are 0..p-1, merge t creates id p+t."""

    n_leaves: int
    merges: tuple[Merge, ...]

    def heights(self) -> NDArray[np.float64]:
        return np.array([m.height for m in self.merges])

    def to_linkage(self) -> NDArray[np.float64]:
        return np.array([[m.a, m.b, m.height, m.size] for m in self.merges], dtype=float).reshape(-1, 4)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_leaves": self.n_leaves,
                "merges": [
                    {"a": m.a, "b": m.b, "height": m.height, "id": m.new_id, "size": m.size}
                    for m in self.merges
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Dendrogram":
        data = json.loads(text)
        merges = tuple(Merge(m["a"], m["b"], float(m["height"]), m["id"], m["size"]) for m in data["merges"])
        return cls(int(data["n_leaves"]), merges)


# rounding noise of a correlation computed from perfectly correlated data
ZERO_SNAP = 64 * np.finfo(np.float64).eps


def dissimilarity(E: ArrayLike) -> NDArray[np.float64]:
    """D = 1 - E with an exact zero diagonal; |D| below a few ulps is snapped to 0."""
    e = np.asarray(E, dtype=np.float64)
    d = 1.0 - e
    d[np.abs(d) < ZERO_SNAP] = 0.0
    np.fill_diagonal(d, 0.0)
    return d


def average_linkage(D: ArrayLike) -> Dendrogram:
    """Agglomerative clustering with the average (UPGMA) criterion.

    Cluster distances are updated with the size-weighted Lance-Williams
    recurrence.  Equal-distance candidates are resolved by the smallest
    ``(min id, max id)`` pair so runs are reproducible.
    """
    d = np.array(D, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InvalidMatrix(f"dissimilarity must be square, got {d.shape}")
    if not np.all(np.isfinite(d)):
        raise InvalidMatrix("dissimilarity has non-finite entries")
    p = d.shape[0]
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, np.inf)

    ids = np.arange(p)
    sizes = np.ones(p)
    active = np.ones(p, dtype=bool)
    merges: list[Merge] = []
    for step in range(p - 1):
        flat = int(np.argmin(d))
        best = d.flat[flat]
        rows, cols = np.nonzero(d == best)
        if rows.size > 2:
            lo = np.minimum(ids[rows], ids[cols])
            hi = np.maximum(ids[rows], ids[cols])
            pick = int(np.lexsort((hi, lo))[0])
            i, j = int(rows[pick]), int(cols[pick])
        else:
            i, j = divmod(flat, p)
        if ids[i] > ids[j]:
            i, j = j, i
        new_id = p + step
        n_i, n_j = sizes[i], sizes[j]
        merges.append(Merge(int(ids[i]), int(ids[j]), float(best), new_id, int(n_i + n_j)))

        # slot i holds the merged cluster, slot j is retired
        merged = (n_i * d[i] + n_j * d[j]) / (n_i + n_j)
        merged[~active] = np.inf
        merged[i] = np.inf
        merged[j] = np.inf
        d[i, :] = merged
        d[:, i] = merged
        d[j, :] = np.inf
        d[:, j] = np.inf
        active[j] = False
        sizes[i] = n_i + n_j
        ids[i] = new_id
    return Dendrogram(p, tuple(merges))


def cophenetic(dend: Dendrogram) -> NDArray[np.float64]:
    """rho_ij = height of the merge where leaves i and j first share a cluster."""
    p = dend.n_leaves
    members: dict[int, list[int]] = {i: [i] for i in range(p)}
    rho = np.zeros((p, p))
    for m in dend.merges:
        left = members.pop(m.a)
        right = members.pop(m.b)
        rho[np.ix_(left, right)] = m.height
        rho[np.ix_(right, left)] = m.height
        members[m.new_id] = left + right
    return rho


def alca_filter(E: ArrayLike) -> NDArray[np.float64]:
    """Xi_ij = 1 - rho_ij from the average-linkage dendrogram of D = 1 - E."""
    e = np.asarray(E, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {e.shape}")
    if not np.all(np.isfinite(e)):
        raise InvalidMatrix("matrix has non-finite entries")
    if np.any(e > 1.0 + 1e-12):
        raise InvalidCorrelation("correlation entries exceed 1")
    xi = 1.0 - cophenetic(average_linkage(dissimilarity(e)))
    np.fill_diagonal(xi, 1.0)
    return xi


def to_unit_diagonal(R: ArrayLike) -> NDArray[np.float64]:
    r = np.asarray(R, dtype=np.float64)
    diag = np.diag(r)
    if np.any(diag <= 0):
        raise DegenerateFirstStep("first-step estimate has a non-positive diagonal entry")
    scale = 1.0 / np.sqrt(diag)
    out = r * np.outer(scale, scale)
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return np.minimum(out, 1.0)


FirstStep = Callable[[NDArray[np.float64]], Union[ShrinkageResult, NDArray[np.float64]]]


def two_step(E: ArrayLike, first: FirstStep) -> NDArray[np.float64]:
    """ALCA applied to the unit-diagonal rescaling of ``first(E)``."""
    e = np.asarray(E, dtype=np.float64)
    r = first(e)
    if isinstance(r, ShrinkageResult):
        r = r.filtered
    return alca_filter(to_unit_diagonal(r))
