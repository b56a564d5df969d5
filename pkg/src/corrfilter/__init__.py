"""Correlation matrix filtering: eigenvalue shrinkage, average-linkage
clustering, two-step combinations, and a Monte Carlo benchmark harness."""

__version__ = "0.1.0"

from .errors import CorrFilterError  # noqa: E402

__all__ = ["CorrFilterError", "__version__"]
