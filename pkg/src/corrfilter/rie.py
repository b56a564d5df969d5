"""Rotationally invariant estimators.

All of them keep the sample eigenvectors and only replace the eigenvalues:
``Xi = sum_k xi_k v_k v_k'``.  The nonlinear shrinkers evaluate the
Stieltjes transform of the sample spectrum slightly below the real axis,
``u_k = q (lambda_k G(z_k) - 1)`` with ``z_k = lambda_k - i eps_k``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidParameter, InvalidPlan
from .linalg import SpectralDecomposition, as_symmetric, reconstruct, stieltjes_at, sym_eigen

__all__ = [
    "MwcvPlan",
    "ShrinkageResult",
    "bj_shrink",
    "clip_k",
    "clip_rmt",
    "exponential_kernel",
    "identity_kernel",
    "lp_shrink",
    "mp_upper_edge",
    "mwcv_shrink",
    "naive",
    "oracle_shrink",
    "shrinkage_argument",
]

log = logging.getLogger(__name__)

Bandwidth = Literal["relative", "absolute"]
Kernel = Callable[[NDArray[np.complex128]], NDArray[np.complex128]]

_IM_FLOOR = 1e-14
# Default bandwidth multiplier for non-white kernels.  With eps = p^-1/2 the
# smoothed u_k path can pass close to the kernel's branch point, where Z is
# almost real and xi_k collapses towards 0.
COLORED_EPSILON_SCALE = 2.0


@dataclass(frozen=True)
class ShrinkageResult:
    """Shrunk eigenvalues paired with the ascending sample eigenvalues."""

    xi: NDArray[np.float64]
    decomp: SpectralDecomposition
    filtered: NDArray[np.float64]
    clamped: int = 0
    fallbacks: int = 0

    @property
    def eigenvalues(self) -> NDArray[np.float64]:
        return self.decomp.eigenvalues


def _finish(decomp: SpectralDecomposition, xi: NDArray[np.float64], fallbacks: int = 0) -> ShrinkageResult:
    xi = np.asarray(xi, dtype=np.float64)
    negative = xi < 0
    clamped = int(np.count_nonzero(negative))
    if clamped:
        log.warning("clamped %d negative shrunk eigenvalues to 0", clamped)
        xi = np.where(negative, 0.0, xi)
    return ShrinkageResult(xi, decomp, reconstruct(decomp, xi), clamped, fallbacks)


def naive(E: ArrayLike) -> ShrinkageResult:
    dec = sym_eigen(E)
    return ShrinkageResult(dec.eigenvalues.copy(), dec, as_symmetric(E).copy())


def mp_upper_edge(q: float) -> float:
    return (1.0 + np.sqrt(q)) ** 2


def clip_rmt(E: ArrayLike, q: float) -> ShrinkageResult:
    """Replace every eigenvalue below the Marchenko-Pastur edge by their mean."""
    if not q > 0:
        raise InvalidParameter(f"q must be positive, got {q}")
    dec = sym_eigen(E)
    lam = dec.eigenvalues
    bulk = lam < mp_upper_edge(q)
    xi = lam.copy()
    if np.any(bulk):
        xi[bulk] = lam[bulk].mean()
    return _finish(dec, xi)


def _clip_top(lam: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    xi = lam.copy()
    rest = lam.size - k
    if rest > 0:
        xi[:rest] = lam[:rest].mean()
    return xi


def clip_k(E: ArrayLike, k: int, *, decomp: SpectralDecomposition | None = None) -> ShrinkageResult:
    """Keep the ``k`` largest eigenvalues and flatten the rest to their mean."""
    dec = decomp if decomp is not None else sym_eigen(E)
    if not 1 <= k <= dec.dim:
        raise InvalidParameter(f"k must be in [1, {dec.dim}], got {k}")
    return _finish(dec, _clip_top(dec.eigenvalues, k))


def shrinkage_argument(
    lam: NDArray[np.float64],
    q: float,
    epsilon: float | None = None,
    *,
    bandwidth: Bandwidth = "relative",
    exclude_self: bool = False,
) -> NDArray[np.complex128]:
    """u_k = q T_E(lambda_k - i eps_k), with Im u_k >= 0.

    ``bandwidth="absolute"`` uses eps_k = epsilon; ``"relative"`` uses
    eps_k = epsilon * lambda_k (floored at a small fraction of the mean
    eigenvalue so null eigenvalues stay regular).  Default epsilon is p^-1/2.
    """
    if not q > 0:
        raise InvalidParameter(f"q must be positive, got {q}")
    p = lam.size
    eps = p**-0.5 if epsilon is None else float(epsilon)
    if not eps > 0:
        raise InvalidParameter(f"epsilon must be positive, got {eps}")
    if bandwidth == "relative":
        floor = 1e-3 * max(float(np.mean(np.abs(lam))), np.finfo(float).tiny)
        widths = eps * np.maximum(lam, floor)
    elif bandwidth == "absolute":
        widths = np.full(p, eps)
    else:
        raise InvalidParameter(f"unknown bandwidth mode {bandwidth!r}")
    z = lam - 1j * widths
    g = stieltjes_at(lam, z, exclude_self=exclude_self)
    return q * (lam * g - 1.0)


def lp_shrink(
    E: ArrayLike,
    q: float,
    epsilon: float | None = None,
    *,
    bandwidth: Bandwidth = "relative",
    exclude_self: bool = False,
) -> ShrinkageResult:
    """Nonlinear shrinkage for white noise, xi_k = lambda_k / |1 + u_k|^2."""
    dec = sym_eigen(E)
    lam = dec.eigenvalues
    u = shrinkage_argument(lam, q, epsilon, bandwidth=bandwidth, exclude_self=exclude_self)
    return _finish(dec, lam / np.abs(1.0 + u) ** 2)


def identity_kernel(u: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Z-transform of white noise, Z(u) = (u + 1) / u."""
    return (u + 1.0) / u


def exponential_kernel(tau: float) -> Kernel:
    """Z-transform of the exponential autocorrelation, eta + sqrt(eta^2 - 1 + 1/u^2).

    The square-root sign is the one that makes Z the functional inverse of the
    moment generating function of A: Im Z and Im u have opposite signs,
    equivalently Im(1/Z) follows Im u, as in the white-noise kernel.
    """
    if not tau > 0:
        raise InvalidParameter(f"tau must be positive, got {tau}")
    eta = 1.0 / np.tanh(1.0 / tau)

    def kernel(u: NDArray[np.complex128]) -> NDArray[np.complex128]:
        root = np.sqrt(eta * eta - 1.0 + 1.0 / (u * u))
        plus = eta + root
        minus = eta - root
        keep_plus = np.sign((1.0 / plus).imag) == np.sign(u.imag)
        return np.where(keep_plus, plus, minus)

    return kernel


def bj_shrink(
    E: ArrayLike,
    q: float,
    tau: float | None = None,
    epsilon: float | None = None,
    *,
    kernel: Kernel | None = None,
    bandwidth: Bandwidth = "relative",
    exclude_self: bool = False,
) -> ShrinkageResult:
    """Nonlinear shrinkage for autocorrelated samples, xi_k = lambda_k Im(1/Z_A(u_k)) / Im(u_k).

    ``tau=None`` (and no explicit ``kernel``) selects white noise, which
    reproduces :func:`lp_shrink`.  For any other kernel the default epsilon
    is ``COLORED_EPSILON_SCALE * p^-1/2``.
    """
    if kernel is None:
        kernel = identity_kernel if tau is None else exponential_kernel(tau)
    dec = sym_eigen(E)
    lam = dec.eigenvalues
    if epsilon is None and kernel is not identity_kernel:
        epsilon = COLORED_EPSILON_SCALE * lam.size**-0.5
    u = shrinkage_argument(lam, q, epsilon, bandwidth=bandwidth, exclude_self=exclude_self)
    flat = np.abs(u.imag) < _IM_FLOOR
    safe_u = np.where(flat, 1.0 + 1j, u)
    xi = lam * (1.0 / kernel(safe_u)).imag / safe_u.imag
    fallbacks = int(np.count_nonzero(flat))
    if fallbacks:
        log.warning("%d eigenvalues had Im(u) < %g; kept unshrunk", fallbacks, _IM_FLOOR)
        xi = np.where(flat, lam, xi)
    return _finish(dec, xi, fallbacks)


@dataclass(frozen=True)
class MwcvPlan:
    T_total: int
    T: int
    T_out: int

    def __post_init__(self) -> None:
        if self.T < 1 or self.T_out < 1 or self.T_total < self.T + self.T_out:
            raise InvalidPlan(f"inconsistent window lengths {self}")
        if (self.T_total - self.T) % self.T_out:
            raise InvalidPlan(f"T_total - T = {self.T_total - self.T} is not a multiple of T_out = {self.T_out}")

    @property
    def K(self) -> int:
        return (self.T_total - self.T) // self.T_out

    @classmethod
    def paper(cls, n: int, multiplier: int = 10, T_out: int | None = None) -> "MwcvPlan":
        return cls(T_total=multiplier * n, T=n, T_out=n if T_out is None else T_out)

    def windows(self) -> list[tuple[slice, slice]]:
        out = []
        for mu in range(self.K):
            a = mu * self.T_out
            out.append((slice(a, a + self.T), slice(a + self.T, a + self.T + self.T_out)))
        return out


def _second_moment(y: NDArray[np.float64]) -> NDArray[np.float64]:
    m = y @ y.T / y.shape[1]
    return 0.5 * (m + m.T)


def oracle_shrink(folds: Iterable[tuple[ArrayLike, ArrayLike]]) -> ShrinkageResult:
    """Average Rayleigh quotients of train eigenvectors against test matrices.

    ``folds`` yields ``(E_train, E_test)`` pairs; eigenvectors are paired by
    ascending rank in each fold and the last train basis is returned.
    """
    total = None
    count = 0
    dec = None
    for e_train, e_test in folds:
        dec = sym_eigen(e_train)
        v = dec.eigenvectors
        test = as_symmetric(e_test)
        quotients = np.einsum("ij,ij->j", v, test @ v)
        total = quotients if total is None else total + quotients
        count += 1
    if dec is None or total is None:
        raise InvalidPlan("no folds supplied")
    return _finish(dec, total / count)


def mwcv_shrink(series: ArrayLike, plan: MwcvPlan) -> ShrinkageResult:
    """Moving-window cross-validated oracle on a p x T_total series."""
    y = np.asarray(series, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != plan.T_total:
        raise InvalidPlan(f"series has shape {y.shape}, plan expects {plan.T_total} columns")
    return oracle_shrink((_second_moment(y[:, tr]), _second_moment(y[:, te])) for tr, te in plan.windows())
