"""Loss functions between SPD matrices and analytic KL expectations.

The KL family defaults to the 2/p-scaled convention, under which the inverse
KL divergence coincides with Stein's loss.  Inverses and log-determinants go
through eigendecompositions with a 1e-12 eigenvalue floor.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidParameter, SingularMatrix, Undefined

__all__ = [
    "LossKind",
    "Spectrum",
    "digamma",
    "evaluate",
    "evaluate_many",
    "expected_kl_pair",
    "expected_kl_population",
    "frobenius",
    "inverse_frobenius",
    "inverse_kl",
    "kl",
    "minimum_variance",
    "stein",
    "symmetrized_stein",
]

EIGEN_FLOOR = 1e-12


class LossKind(str, enum.Enum):
    KL = "kl"
    INVERSE_KL = "inverse_kl"
    FROBENIUS = "frobenius"
    INVERSE_FROBENIUS = "inverse_frobenius"
    MINIMUM_VARIANCE = "mv"
    SYMMETRIZED_STEIN = "ss"

    @classmethod
    def parse(cls, name: str | "LossKind") -> "LossKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {
            "stein": cls.INVERSE_KL,
            "inverse_stein": cls.KL,
            "minimum_variance": cls.MINIMUM_VARIANCE,
            "symmetrized_stein": cls.SYMMETRIZED_STEIN,
            "f": cls.FROBENIUS,
            "inv_f": cls.INVERSE_FROBENIUS,
            "inv_kl": cls.INVERSE_KL,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise InvalidParameter(f"unknown loss {name!r}") from None


ALL_LOSSES = tuple(LossKind)


class Spectrum:
    """Eigendecomposition of one symmetric argument, with lazy SPD-only quantities."""

    def __init__(self, matrix: ArrayLike):
        m = np.asarray(matrix, dtype=np.float64)
        self.matrix = 0.5 * (m + m.T)
        self.p = self.matrix.shape[0]
        self.w, self.v = np.linalg.eigh(self.matrix)

    @classmethod
    def from_decomposition(cls, w: ArrayLike, v: ArrayLike) -> "Spectrum":
        """Build from known eigenpairs without re-diagonalising."""
        self = cls.__new__(cls)
        self.w = np.asarray(w, dtype=np.float64)
        self.v = np.asarray(v, dtype=np.float64)
        m = (self.v * self.w) @ self.v.T
        self.matrix = 0.5 * (m + m.T)
        self.p = self.w.size
        return self

    def require_spd(self) -> None:
        low = float(np.min(self.w))
        if low <= EIGEN_FLOOR:
            raise SingularMatrix(f"minimum eigenvalue {low:.3e} is below {EIGEN_FLOOR}")

    @cached_property
    def logdet(self) -> float:
        self.require_spd()
        return float(np.sum(np.log(self.w)))

    @cached_property
    def inverse(self) -> NDArray[np.float64]:
        self.require_spd()
        inv = (self.v / self.w) @ self.v.T
        return 0.5 * (inv + inv.T)

    @cached_property
    def trace_inverse(self) -> float:
        self.require_spd()
        return float(np.sum(1.0 / self.w))

    def rayleigh(self, other: NDArray[np.float64]) -> NDArray[np.float64]:
        """Diagonal of V' M V for another matrix M."""
        return np.einsum("ij,ij->j", self.v, other @ self.v)


def _spectrum(x: ArrayLike | Spectrum) -> Spectrum:
    return x if isinstance(x, Spectrum) else Spectrum(x)


def _kl_raw(a: Spectrum, b: Spectrum) -> float:
    b.require_spd()
    trace = float(np.sum(b.rayleigh(a.matrix) / b.w))
    return 0.5 * (b.logdet - a.logdet + trace - a.p)


def kl(A: ArrayLike | Spectrum, B: ArrayLike | Spectrum, scaled: bool = True) -> float:
    """K(A, B) = 1/2 [log det(B A^-1) + Tr(B^-1 A) - p], times 2/p if scaled."""
    a, b = _spectrum(A), _spectrum(B)
    raw = _kl_raw(a, b)
    return 2.0 * raw / a.p if scaled else raw


def inverse_kl(A: ArrayLike | Spectrum, B: ArrayLike | Spectrum, scaled: bool = True) -> float:
    """K(A^-1, B^-1); the scaled value is Stein's loss."""
    a, b = _spectrum(A), _spectrum(B)
    a.require_spd()
    trace = float(np.sum(a.rayleigh(b.matrix) / a.w))
    raw = 0.5 * (a.logdet - b.logdet + trace - a.p)
    return 2.0 * raw / a.p if scaled else raw


def stein(A: ArrayLike, B: ArrayLike) -> float:
    """Stein's loss (1/p) Tr(A^-1 B) - (1/p) log det(A^-1 B) - 1, via dense solves."""
    a = np.asarray(A, dtype=np.float64)
    b = np.asarray(B, dtype=np.float64)
    p = a.shape[0]
    m = np.linalg.solve(a, b)
    sign, logdet = np.linalg.slogdet(m)
    if sign <= 0:
        raise SingularMatrix("A^-1 B has a non-positive determinant")
    return float(np.trace(m)) / p - logdet / p - 1.0


def frobenius(A: ArrayLike | Spectrum, B: ArrayLike | Spectrum) -> float:
    a = A.matrix if isinstance(A, Spectrum) else np.asarray(A, dtype=np.float64)
    b = B.matrix if isinstance(B, Spectrum) else np.asarray(B, dtype=np.float64)
    diff = a - b
    return float(np.sum(diff * diff)) / a.shape[0]


def inverse_frobenius(A: ArrayLike | Spectrum, B: ArrayLike | Spectrum) -> float:
    a, b = _spectrum(A), _spectrum(B)
    return frobenius(a.inverse, b.inverse)


def minimum_variance(A: ArrayLike | Spectrum, B: ArrayLike | Spectrum) -> float:
    """[Tr(B^-1 A B^-1)/p] / [Tr(B^-1)/p]^2 - 1 / [Tr(A^-1)/p]."""
    a, b = _spectrum(A), _spectrum(B)
    p = a.p
    b.require_spd()
    sandwich = float(np.sum(b.rayleigh(a.matrix) / (b.w * b.w))) / p
    return sandwich / (b.trace_inverse / p) ** 2 - 1.0 / (a.trace_inverse / p)


def symmetrized_stein(A: ArrayLike | Spectrum, B: ArrayLike | Spectrum) -> float:
    """(1/p) Tr(B A^-1 + B^-1 A) - 2."""
    a, b = _spectrum(A), _spectrum(B)
    a.require_spd()
    b.require_spd()
    t1 = float(np.sum(a.rayleigh(b.matrix) / a.w))
    t2 = float(np.sum(b.rayleigh(a.matrix) / b.w))
    return (t1 + t2) / a.p - 2.0


_DISPATCH = {
    LossKind.KL: kl,
    LossKind.INVERSE_KL: inverse_kl,
    LossKind.FROBENIUS: frobenius,
    LossKind.INVERSE_FROBENIUS: inverse_frobenius,
    LossKind.MINIMUM_VARIANCE: minimum_variance,
    LossKind.SYMMETRIZED_STEIN: symmetrized_stein,
}


def evaluate(kind: LossKind | str, A: ArrayLike | Spectrum, B: ArrayLike | Spectrum) -> float:
    return _DISPATCH[LossKind.parse(kind)](A, B)


def evaluate_many(
    A: ArrayLike | Spectrum,
    B: ArrayLike | Spectrum,
    kinds: Iterable[LossKind] = ALL_LOSSES,
) -> Mapping[LossKind, float]:
    """Every requested loss from a single decomposition of each argument.

    A loss that needs an inverse of a singular argument is reported as NaN.
    """
    a, b = _spectrum(A), _spectrum(B)
    out: dict[LossKind, float] = {}
    for kind in kinds:
        try:
            out[kind] = _DISPATCH[kind](a, b)
        except SingularMatrix:
            out[kind] = math.nan
    return out


def expected_kl_pair(p: int, n: int) -> float:
    """Scaled E[K(E1, E2)] = (p + 1) / (n - p - 1) for two independent samples."""
    if n <= p + 1:
        raise Undefined(f"needs n > p + 1, got p = {p}, n = {n}")
    return float(Fraction(p + 1, n - p - 1))


def expected_kl_population(p: int, n: int) -> float:
    """Scaled E[K(C, E)] for a Gaussian sample covariance with n observations."""
    if n <= p + 1:
        raise Undefined(f"needs n > p + 1, got p = {p}, n = {n}")
    terms = [p * math.log(2.0 / n), p * (p + 1) / (n - p - 1)]
    terms.extend(digamma(t / 2.0) for t in range(n - p + 1, n + 1))
    return math.fsum(terms) / p


# Bernoulli-number coefficients B_2k / (2k) of the digamma asymptotic series
_DIGAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x: float) -> float:
    """psi(x) by upward recurrence to x >= 6 and the asymptotic expansion."""
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise InvalidParameter(f"digamma needs a positive finite argument, got {x}")
    shift = 0.0
    while x < 6.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for c in _DIGAMMA_SERIES:
        series += c * power
        power *= inv2
    return shift + math.log(x) - 0.5 / x - series
