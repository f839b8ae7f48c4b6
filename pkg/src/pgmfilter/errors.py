"""Exception types shared across the package."""

from __future__ import annotations

import numpy as np


class PGMError(Exception):
    """Base class for all errors raised by pgmfilter."""


class CholeskyFailure(PGMError, np.linalg.LinAlgError):
    """A covariance matrix failed to factor as symmetric positive definite.

    Attributes:
        dim: dimension of the offending matrix.
        pivot: zero-based index of the first non-positive pivot.
    """

    def __init__(self, dim: int, pivot: int, what: str = "covariance"):
        self.dim = dim
        self.pivot = pivot
        super().__init__(
            f"{what} of dimension {dim} is not positive definite "
            f"(Cholesky pivot {pivot} failed)"
        )


class DimensionError(PGMError, ValueError):
    """Array shapes disagree with the declared state/measurement dimension."""


class InvalidArgument(PGMError, ValueError):
    """An argument is outside the documented domain of an operation."""


class ConfigError(PGMError, ValueError):
    """An experiment configuration is malformed.

    Attributes:
        field: dotted path of the offending key, if known.
        line: 1-based line number in the config file, if known.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
