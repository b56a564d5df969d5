"""Dense symmetric linear-algebra primitives shared by the estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DimensionMismatch,
    InvalidMatrix,
    NotNormalized,
    NotPositiveSemiDefinite,
    SingularPoint,
)

__all__ = [
    "SpectralDecomposition",
    "as_symmetric",
    "ipr",
    "reconstruct",
    "sqrt_spd",
    "stieltjes",
    "stieltjes_at",
    "sym_eigen",
]

SYMMETRY_TOL = 1e-12
PSD_CLAMP = -1e-10
# relative gap below which two eigenvalues are treated as one degenerate level
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues; column ``i`` of ``eigenvectors`` pairs with ``eigenvalues[i]``."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)


def as_symmetric(matrix: ArrayLike, *, tol: float = SYMMETRY_TOL) -> NDArray[np.float64]:
    """Validate a square, finite, symmetric matrix and return it as float64."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrix("matrix has non-finite entries")
    if m.size and np.max(np.abs(m - m.T)) > tol * max(1.0, float(np.max(np.abs(m)))):
        raise InvalidMatrix("matrix is not symmetric")
    return m


def sym_eigen(matrix: ArrayLike) -> SpectralDecomposition:
    """Eigendecomposition with a deterministic basis.

    Eigenvalues come back ascending. Each eigenvector is signed so that its
    largest-magnitude component is positive, and vectors inside a degenerate
    level are ordered by the index of that component.
    """
    m = as_symmetric(matrix)
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    p = w.size
    if p == 0:
        return SpectralDecomposition(w, v)
    lead = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[lead, np.arange(p)])
    signs[signs == 0] = 1.0
    v = v * signs

    scale = max(1.0, float(np.max(np.abs(w))))
    order = np.arange(p)
    start = 0
    while start < p:
        stop = start + 1
        while stop < p and w[stop] - w[start] <= _TIE_RTOL * scale:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            order[start:stop] = block[np.argsort(lead[block], kind="stable")]
        start = stop
    return SpectralDecomposition(w, np.ascontiguousarray(v[:, order]))


def sqrt_spd(matrix: ArrayLike) -> NDArray[np.float64]:
    """Symmetric square root of a positive semi-definite matrix."""
    dec = sym_eigen(matrix)
    w = dec.eigenvalues
    if w.size and w[0] < PSD_CLAMP:
        raise NotPositiveSemiDefinite(f"minimum eigenvalue {w[0]:.3e} is below {PSD_CLAMP}")
    root = np.sqrt(np.clip(w, 0.0, None))
    v = dec.eigenvectors
    r = (v * root) @ v.T
    return 0.5 * (r + r.T)


def reconstruct(decomp: SpectralDecomposition, xi: ArrayLike) -> NDArray[np.float64]:
    """Return ``sum_i xi_i v_i v_i'`` over the decomposition's eigenvectors."""
    values = np.asarray(xi, dtype=np.float64)
    if values.shape != (decomp.dim,):
        raise DimensionMismatch(f"xi has shape {values.shape}, expected ({decomp.dim},)")
    if not np.all(np.isfinite(values)):
        raise InvalidMatrix("xi has non-finite entries")
    v = decomp.eigenvectors
    out = (v * values) @ v.T
    return 0.5 * (out + out.T)


def stieltjes(eigenvalues: ArrayLike, z: complex) -> complex:
    """G(z) = (1/p) sum_j 1/(z - lambda_j)."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    z = complex(z)
    if z.imag == 0.0 and np.any(lam == z.real):
        raise SingularPoint(f"z = {z.real!r} coincides with an eigenvalue")
    return complex(np.mean(1.0 / (z - lam)))


def stieltjes_at(
    eigenvalues: ArrayLike,
    points: ArrayLike,
    *,
    exclude_self: bool = False,
) -> NDArray[np.complex128]:
    """Vectorised Stieltjes transform of the spectrum at several points.

    With ``exclude_self`` the ``k``-th point skips the ``k``-th eigenvalue
    (points and eigenvalues must then have equal length); normalisation stays
    ``1/p`` either way.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    z = np.asarray(points, dtype=np.complex128)
    if np.any((z.imag == 0.0)[:, None] & (z.real[:, None] == lam[None, :])):
        raise SingularPoint("an evaluation point coincides with an eigenvalue")
    resolvent = 1.0 / (z[:, None] - lam[None, :])
    if exclude_self:
        if z.shape != lam.shape:
            raise DimensionMismatch("exclude_self needs one point per eigenvalue")
        np.fill_diagonal(resolvent, 0.0)
    return resolvent.sum(axis=1) / lam.size


def ipr(vector: ArrayLike) -> float:
    """Inverse participation ratio sum_j v_j^4 of a unit vector."""
    v = np.asarray(vector, dtype=np.float64).ravel()
    if abs(float(np.dot(v, v)) - 1.0) > 1e-8:
        raise NotNormalized("IPR needs a unit-norm vector")
    return float(np.sum(v**4))
