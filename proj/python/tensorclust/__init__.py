"""Tensor normal mixture clustering.

Arrays use numpy's shape (n, p1, ..., pM); labels are zero-based.
"""

from ._core import (
    ConfigError,
    DimensionError,
    NumericalError,
    clustering_error,
    fit_deem,
    fit_em,
    kmeans,
    presets,
    simulate,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "NumericalError",
    "clustering_error",
    "fit_deem",
    "fit_em",
    "kmeans",
    "presets",
    "simulate",
]
