"""Input validation helpers shared by the estimators and the functional API."""

from __future__ import annotations

import math
import numbers

import numpy as np

__all__ = [
    "QLMError",
    "DomainError",
    "HorizonProximityError",
    "NearCriticalError",
    "PreconditionError",
    "FillError",
    "ConfigError",
    "sphere_area",
    "ball_volume",
    "lam_constant",
    "check_dimension",
    "check_positive",
    "check_graph",
    "check_heights",
]


class QLMError(Exception):
    """Base class for errors raised by this package."""


class DomainError(QLMError, ValueError):
    """A node or point lies outside the region where the field is defined."""


class HorizonProximityError(QLMError, ValueError):
    """Curvature requested at a node whose slope exceeds the horizon cap."""


class NearCriticalError(QLMError, ValueError):
    """A level set has facets where |Df| is below the regularity threshold."""

    def __init__(self, message, facets=None):
        super().__init__(message)
        self.facets = np.asarray(facets if facets is not None else [], dtype=int)


class PreconditionError(QLMError, ValueError):
    """A documented precondition of an operation does not hold."""


class FillError(QLMError, ValueError):
    """The field oscillates on a horizon component and cannot be filled."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class ConfigError(QLMError, ValueError):
    """Malformed run configuration."""


# area of the unit (n-1)-sphere in R^n, tabulated for the common dimensions
_SPHERE_AREA = {n: 2.0 * math.pi ** (n / 2) / math.gamma(n / 2) for n in range(2, 9)}


def sphere_area(n: int) -> float:
    """Area of the unit sphere S^{n-1} in R^n (4*pi for n = 3)."""
    if n in _SPHERE_AREA:
        return _SPHERE_AREA[n]
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int) -> float:
    return sphere_area(n) / n


def lam_constant(n: int) -> float:
    """Normalisation 2 (n-1) omega_{n-1} of the Lam functional (16 pi for n = 3)."""
    return 2.0 * (n - 1) * sphere_area(n)


def check_dimension(n, minimum: int = 2) -> int:
    if not isinstance(n, numbers.Integral) or isinstance(n, bool):
        raise TypeError(f"dimension must be an integer, got {n!r}")
    if n < minimum:
        raise ValueError(f"dimension must be >= {minimum}, got {n}")
    return int(n)


def check_positive(value, name: str, strict: bool = True) -> float:
    value = float(value)
    if not np.isfinite(value) or (value <= 0 if strict else value < 0):
        cmp = ">" if strict else ">="
        raise ValueError(f"{name} must be finite and {cmp} 0, got {value}")
    return value


_GRAPH_METHODS = ("level_set", "value_range", "boundary_level_value", "sample_derivatives")


def check_graph(X):
    """Return ``X`` if it quacks like a graph field, raise ``TypeError`` otherwise.

    Both :class:`qlm.domain.ScalarField` and :class:`qlm.radial.RadialGraph`
    pass; plain arrays do not, since the estimators need the domain and the
    derivative data that travel with a field.
    """
    missing = [m for m in _GRAPH_METHODS if not hasattr(X, m)]
    if missing:
        raise TypeError(
            f"expected a ScalarField or RadialGraph, got {type(X).__name__} "
            f"(missing {', '.join(missing)})"
        )
    return X


def check_heights(heights) -> np.ndarray:
    """Validate a height ladder. Heights outside the range of f are legal."""
    h = np.atleast_1d(np.asarray(heights, dtype=float))
    if h.ndim != 1:
        raise ValueError("heights must be one-dimensional")
    if not np.all(np.isfinite(h)):
        raise ValueError("heights must be finite")
    return h
