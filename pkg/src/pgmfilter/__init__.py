"""Particle Gaussian mixture filtering with baseline filters and a benchmark harness."""

from .errors import CholeskyFailure, ConfigError, DimensionError, InvalidArgument, PGMError
from .gaussmix import (
    GaussianComponent,
    GaussianMixture,
    gaussian_logpdf,
    merge_components,
    merge_pass,
    mixture_pdf,
    sample_mixture,
    similarity,
)

__version__ = "0.1.0"

__all__ = [
    "CholeskyFailure",
    "ConfigError",
    "DimensionError",
    "GaussianComponent",
    "GaussianMixture",
    "InvalidArgument",
    "PGMError",
    "gaussian_logpdf",
    "merge_components",
    "merge_pass",
    "mixture_pdf",
    "sample_mixture",
    "similarity",
]
