"""Domains U, U_o in R^n, Cartesian grids, and sampled graph functions.

A :class:`ScalarField` stores f on the nodes of a uniform grid together with
a node classification mask and, optionally, an :class:`AnalyticProfile` that
evaluates f, Df and Hess f exactly.  Derivatives come either from the
profile or from second-order finite differences; nodes whose value is not
finite (inside a horizon, outside the sampled region) are skipped by every
stencil.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from ._validation import (
    DomainError,
    ball_volume,
    check_dimension,
    sphere_area,
)
from .simplices import cube_corners, cross_sections, kuhn_simplices, sublevel_fraction

__all__ = [
    "Ball",
    "Box",
    "ImplicitRegion",
    "Domain",
    "GridSpec",
    "AnalyticProfile",
    "ScalarField",
    "INTERIOR",
    "NEAR_OUTER",
    "NEAR_INNER",
    "OUTSIDE",
    "gradient",
    "hessian",
    "volume_integral",
]

INTERIOR, NEAR_OUTER, NEAR_INNER, OUTSIDE = 0, 1, 2, 3
MASK_NAMES = {INTERIOR: "interior", NEAR_OUTER: "near-boundary", NEAR_INNER: "near-horizon", OUTSIDE: "outside"}


# --------------------------------------------------------------------------- regions

@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def n(self):
        return len(self.center)

    def sdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius

    def bounds(self):
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    def volume(self):
        return ball_volume(self.n) * self.radius**self.n

    def area(self):
        return sphere_area(self.n) * self.radius ** (self.n - 1)

    def to_dict(self):
        return {"type": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(float(c) for c in self.hi))
        if len(self.lo) != len(self.hi) or any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box needs lo < hi on every axis")

    @property
    def n(self):
        return len(self.lo)

    def sdf(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        c, half = (lo + hi) / 2, (hi - lo) / 2
        q = np.abs(x - c) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return outside + inside

    def bounds(self):
        return np.asarray(self.lo), np.asarray(self.hi)

    def volume(self):
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def area(self):
        side = np.subtract(self.hi, self.lo)
        total = 0.0
        for i in range(len(side)):
            total += 2 * np.prod(np.delete(side, i))
        return float(total)

    def to_dict(self):
        return {"type": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class ImplicitRegion:
    """Region ``{sdf < 0}`` given by a user-supplied (signed-distance) sampler.

    Volume and boundary area are measured on the grid when not supplied.
    """

    sdf_fn: Callable
    lo: tuple
    hi: tuple
    exact_volume: float | None = None
    exact_area: float | None = None

    @property
    def n(self):
        return len(self.lo)

    def sdf(self, x):
        return np.asarray(self.sdf_fn(np.asarray(x, dtype=float)), dtype=float)

    def bounds(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    def volume(self):
        return self.exact_volume

    def area(self):
        return self.exact_area

    def to_dict(self):
        return {"type": "implicit", "lo": list(self.lo), "hi": list(self.hi)}


def _region_from_dict(d):
    kind = d.get("type", "ball")
    if kind == "ball":
        return Ball(tuple(d["center"]), float(d["radius"]))
    if kind == "box":
        return Box(tuple(d["lo"]), tuple(d["hi"]))
    raise ValueError(f"unknown region type {kind!r}")


def _contains(outer, inner, margin=0.0) -> bool:
    if isinstance(outer, Ball) and isinstance(inner, Ball):
        d = np.linalg.norm(np.subtract(outer.center, inner.center))
        return d + inner.radius + margin < outer.radius
    if isinstance(outer, Box) and isinstance(inner, Ball):
        c = np.asarray(inner.center)
        return bool(np.all(c - inner.radius - margin > outer.lo) and np.all(c + inner.radius + margin < outer.hi))
    # sample the inner bounding box
    lo, hi = inner.bounds()
    axes = [np.linspace(a, b, 9) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    pts = pts[inner.sdf(pts) <= 0]
    return bool(np.all(outer.sdf(pts) < -margin))


def _disjoint(a, b) -> bool:
    if isinstance(a, Ball) and isinstance(b, Ball):
        return np.linalg.norm(np.subtract(a.center, b.center)) > a.radius + b.radius
    lo = np.maximum(a.bounds()[0], b.bounds()[0])
    hi = np.minimum(a.bounds()[1], b.bounds()[1])
    if np.any(lo > hi):
        return True
    axes = [np.linspace(x, y, 9) for x, y in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    return not np.any((a.sdf(pts) < 0) & (b.sdf(pts) < 0))


@dataclass(frozen=True)
class Domain:
    """Outer region U and horizon components U_o (possibly none), U_o compact in U."""

    n: int
    outer: object
    inner: tuple = ()

    def __post_init__(self):
        check_dimension(self.n)
        object.__setattr__(self, "inner", tuple(self.inner))
        for reg in (self.outer, *self.inner):
            if reg.n != self.n:
                raise ValueError("region dimension does not match the domain")
        for i, comp in enumerate(self.inner):
            if not _contains(self.outer, comp, margin=0.0):
                raise ValueError(f"horizon component {i} is not compactly contained in U")
        for i in range(len(self.inner)):
            for j in range(i + 1, len(self.inner)):
                if not _disjoint(self.inner[i], self.inner[j]):
                    raise ValueError(f"horizon components {i} and {j} overlap")

    @property
    def has_horizon(self) -> bool:
        return len(self.inner) > 0

    def outer_sdf(self, x):
        return self.outer.sdf(x)

    def inner_sdf(self, x):
        """Signed distance to U_o (negative inside any component; +inf if empty)."""
        x = np.asarray(x, dtype=float)
        if not self.inner:
            return np.full(x.shape[:-1], np.inf)
        return np.min(np.stack([c.sdf(x) for c in self.inner]), axis=0)

    def component_of(self, x):
        """Index of the nearest horizon component for each point (-1 if none)."""
        x = np.asarray(x, dtype=float)
        if not self.inner:
            return np.full(x.shape[:-1], -1, dtype=int)
        return np.argmin(np.stack([c.sdf(x) for c in self.inner]), axis=0)

    def bounds(self):
        return self.outer.bounds()

    def boundary_area(self):
        """|dU|, or None when it has to be measured on a grid."""
        return self.outer.area()

    def volume(self):
        return self.outer.volume()

    def inner_volumes(self):
        return [c.volume() for c in self.inner]

    def inner_areas(self):
        return [c.area() for c in self.inner]

    def to_dict(self):
        return {"n": self.n, "outer": self.outer.to_dict(), "inner": [c.to_dict() for c in self.inner]}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n"]), _region_from_dict(d["outer"]), tuple(_region_from_dict(c) for c in d.get("inner", [])))


# --------------------------------------------------------------------------- grids

@dataclass(frozen=True)
class GridSpec:
    """Node-centred uniform grid on the box [lo, hi]; nodes sit on both ends."""

    resolution: tuple
    lo: tuple
    hi: tuple
    boundary: str = "one-sided"

    def __post_init__(self):
        res = tuple(int(r) for r in self.resolution)
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if not (len(res) == len(self.lo) == len(self.hi)):
            raise ValueError("resolution, lo and hi must have one entry per axis")
        if any(r < 8 for r in res):
            raise ValueError("grid resolution must be >= 8 on every axis")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("grid spacing must be positive")
        if self.boundary not in ("one-sided", "clamped"):
            raise ValueError("boundary must be 'one-sided' or 'clamped'")

    @classmethod
    def around(cls, domain: Domain, resolution: int, pad_cells: int = 3, boundary="one-sided"):
        """Cubic-cell grid covering U with ``pad_cells`` extra cells per side."""
        lo, hi = (np.asarray(b, dtype=float) for b in domain.bounds())
        width = float(np.max(hi - lo))
        h = width / (resolution - 1 - 2 * pad_cells)
        c = (lo + hi) / 2
        half = (resolution - 1) * h / 2
        n = domain.n
        return cls((resolution,) * n, tuple(c - half), tuple(c + half), boundary)

    @property
    def n(self):
        return len(self.resolution)

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.hi) - np.asarray(self.lo)) / (np.asarray(self.resolution) - 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self):
        return [np.linspace(a, b, r) for a, b, r in zip(self.lo, self.hi, self.resolution)]

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def to_dict(self):
        return {"resolution": list(self.resolution), "lo": list(self.lo), "hi": list(self.hi),
                "boundary": self.boundary}


# --------------------------------------------------------------------------- profiles

@dataclass(frozen=True)
class AnalyticProfile:
    """Exact f, Df and Hess f as callables on point arrays of shape (..., n)."""

    value: Callable
    grad: Callable
    hess: Callable
    radial: bool = False
    description: str = ""


# --------------------------------------------------------------------------- finite differences

def _shift(a, axis, k):
    """Array whose entry i holds a[i+k] along ``axis`` (NaN past the edge)."""
    out = np.full_like(a, np.nan)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if k > 0:
        src[axis], dst[axis] = slice(k, None), slice(0, -k)
    else:
        src[axis], dst[axis] = slice(0, k), slice(-k, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _pick(*candidates):
    out = candidates[-1].copy()
    for c in reversed(candidates[:-1]):
        out = np.where(np.isfinite(c), c, out)
    return out


def _clamp_fill(central, base, axis):
    """Copy the neighbouring central value into nodes that lack a full stencil."""
    fwd = _shift(central, axis, 1)
    bwd = _shift(central, axis, -1)
    out = _pick(central, fwd, bwd)
    return np.where(np.isfinite(base), out, np.nan)


def first_derivative(a, axis, h, boundary="one-sided"):
    p1, m1 = _shift(a, axis, 1), _shift(a, axis, -1)
    central = (p1 - m1) / (2 * h)
    if boundary == "clamped":
        return _clamp_fill(central, a, axis)
    p2, m2 = _shift(a, axis, 2), _shift(a, axis, -2)
    fwd = (-3 * a + 4 * p1 - p2) / (2 * h)
    bwd = (3 * a - 4 * m1 + m2) / (2 * h)
    out = _pick(central, fwd, bwd, (p1 - a) / h, (a - m1) / h)
    return np.where(np.isfinite(a), out, np.nan)


def second_derivative(a, axis, h, boundary="one-sided"):
    p1, m1 = _shift(a, axis, 1), _shift(a, axis, -1)
    central = (p1 - 2 * a + m1) / h**2
    if boundary == "clamped":
        return _clamp_fill(central, a, axis)
    p2, m2 = _shift(a, axis, 2), _shift(a, axis, -2)
    p3, m3 = _shift(a, axis, 3), _shift(a, axis, -3)
    fwd = (2 * a - 5 * p1 + 4 * p2 - p3) / h**2
    bwd = (2 * a - 5 * m1 + 4 * m2 - m3) / h**2
    out = _pick(central, fwd, bwd, (a - 2 * p1 + p2) / h**2, (a - 2 * m1 + m2) / h**2)
    return np.where(np.isfinite(a), out, np.nan)


def fd_derivatives(values, spacing, boundary="one-sided"):
    """Gradient (..., n) and symmetrised Hessian (..., n, n) of a node array."""
    n = values.ndim
    grad = np.empty(values.shape + (n,))
    hess = np.empty(values.shape + (n, n))
    first = [first_derivative(values, i, spacing[i], boundary) for i in range(n)]
    for i in range(n):
        grad[..., i] = first[i]
        hess[..., i, i] = second_derivative(values, i, spacing[i], boundary)
    for i in range(n):
        for j in range(i + 1, n):
            dij = first_derivative(first[i], j, spacing[j], boundary)
            dji = first_derivative(first[j], i, spacing[i], boundary)
            mixed = 0.5 * (dij + dji)
            hess[..., i, j] = hess[..., j, i] = mixed
    return grad, hess


# --------------------------------------------------------------------------- scalar field

class ScalarField:
    """Graph function f sampled on a grid over U \\ U_o.

    Parameters
    ----------
    domain, grid : where f lives and where it is sampled.
    values : node array of shape ``grid.resolution``; NaN where f is undefined.
        Finite values outside U are kept as an extension and used by stencils
        and by the extraction of the boundary level set.
    profile : optional exact evaluator of f, Df, Hess f.
    source : ``"fd"`` or ``"analytic"``; where derivatives come from.
        Defaults to ``"analytic"`` when a profile is attached.
    slope_cap : nodes with |Df| above the cap are treated as horizon collar.
    """

    def __init__(self, domain: Domain, grid: GridSpec, values, profile: AnalyticProfile | None = None,
                 source: str | None = None, slope_cap: float = 1e6, label: str = "",
                 radial_monotone: bool = False, fill_values: Sequence[float] | None = None):
        if grid.n != domain.n:
            raise ValueError("grid and domain dimensions differ")
        values = np.array(values, dtype=float)
        if values.shape != grid.resolution:
            raise ValueError(f"values shape {values.shape} does not match grid {grid.resolution}")
        self.domain = domain
        self.grid = grid
        self.profile = profile
        if source is None:
            source = "analytic" if profile is not None else "fd"
        if source not in ("fd", "analytic"):
            raise ValueError("source must be 'fd' or 'analytic'")
        if source == "analytic" and profile is None:
            raise ValueError("analytic source needs a profile")
        self.source = source
        self.slope_cap = float(slope_cap)
        self.label = label
        self.radial_monotone = bool(radial_monotone)
        self._fill_values = None if fill_values is None else tuple(float(v) for v in fill_values)
        values.setflags(write=False)
        self._values = values
        h = float(np.max(grid.spacing))
        inside = (self.outer_sdf <= 0) & (self.inner_sdf > h)
        if not np.all(np.isfinite(values[inside])):
            raise ValueError("values must be finite on nodes of U away from the horizon")

    # -- basic data
    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def values(self) -> np.ndarray:
        return self._values

    @classmethod
    def from_function(cls, domain, grid, f, grad=None, hess=None, **kwargs):
        """Sample ``f`` on the grid; attach an analytic profile if derivatives are given."""
        pts = grid.points()
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = np.asarray(f(pts), dtype=float)
        profile = None
        if grad is not None and hess is not None:
            profile = AnalyticProfile(f, grad, hess)
        return cls(domain, grid, vals, profile=profile, **kwargs)

    @cached_property
    def points(self) -> np.ndarray:
        return self.grid.points()

    @cached_property
    def outer_sdf(self) -> np.ndarray:
        return self.domain.outer_sdf(self.points)

    @cached_property
    def inner_sdf(self) -> np.ndarray:
        return self.domain.inner_sdf(self.points)

    @cached_property
    def mask(self) -> np.ndarray:
        h = float(np.max(self.grid.spacing))
        out_sdf, in_sdf = self.outer_sdf, self.inner_sdf
        m = np.full(self.grid.resolution, INTERIOR, dtype=np.int8)
        m[out_sdf > -h] = NEAR_OUTER
        m[in_sdf < h] = NEAR_INNER
        m[(out_sdf > 0) | (in_sdf < 0) | ~np.isfinite(self._values)] = OUTSIDE
        return m

    def node_mask(self, node):
        return MASK_NAMES[int(self.mask[tuple(node)])]

    # -- derivatives
    @cached_property
    def _fd(self):
        vals = np.array(self._values)
        grad, hess = fd_derivatives(vals, self.grid.spacing, self.grid.boundary)
        slope = np.linalg.norm(grad, axis=-1)
        steep = np.isfinite(slope) & (slope > self.slope_cap)
        if np.any(steep):
            vals[steep] = np.nan
            grad, hess = fd_derivatives(vals, self.grid.spacing, self.grid.boundary)
            grad[steep] = np.nan
            hess[steep] = np.nan
        return grad, hess

    @cached_property
    def _analytic(self):
        pts = self.points
        with np.errstate(invalid="ignore", divide="ignore"):
            grad = np.asarray(self.profile.grad(pts), dtype=float)
            hess = np.asarray(self.profile.hess(pts), dtype=float)
        bad = ~np.isfinite(self._values)
        grad[bad] = np.nan
        hess[bad] = np.nan
        return grad, hess

    def derivative_arrays(self, source=None):
        """Full node arrays (grad, hess) from ``source`` (default: the field's own)."""
        source = source or self.source
        if source == "analytic":
            if self.profile is None:
                raise ValueError("field has no analytic profile")
            return self._analytic
        return self._fd

    def derivatives_at_points(self, x):
        """Analytic derivatives at arbitrary points (requires a profile)."""
        if self.profile is None:
            raise ValueError("field has no analytic profile")
        with np.errstate(invalid="ignore", divide="ignore"):
            return (np.asarray(self.profile.grad(x), dtype=float), np.asarray(self.profile.hess(x), dtype=float))

    def derivatives_at(self, node):
        node = self._check_node(node)
        grad, hess = self.derivative_arrays()
        return grad[node], hess[node]

    def _check_node(self, node):
        node = tuple(int(i) for i in node)
        if len(node) != self.n or any(i < 0 or i >= r for i, r in zip(node, self.grid.resolution)):
            raise DomainError(f"node {node} is not on the grid")
        if self.mask[node] == OUTSIDE:
            raise DomainError(f"node {node} lies outside U \\ U_o")
        return node

    def point_of(self, node):
        return self.points[tuple(node)]

    @cached_property
    def slope(self) -> np.ndarray:
        grad, _ = self.derivative_arrays()
        return np.linalg.norm(grad, axis=-1)

    # -- sampled curvature data
    def sample_derivatives(self, include_near_boundary=False):
        """(points, grad, hess) at interior nodes away from the horizon collar."""
        keep = self.mask == INTERIOR
        if include_near_boundary:
            keep |= self.mask == NEAR_OUTER
        grad, hess = self.derivative_arrays()
        slope = np.linalg.norm(grad, axis=-1)
        keep &= np.isfinite(slope) & (slope < self.slope_cap) & np.all(np.isfinite(hess), axis=(-1, -2))
        return self.points[keep], grad[keep], hess[keep]

    # -- values
    @cached_property
    def _interior_values(self):
        inside = (self.outer_sdf <= 0) & (self.inner_sdf >= 0) & np.isfinite(self._values)
        return self._values[inside]

    def value_range(self):
        """(min f, max f) over the closure of U \\ U_o.

        Boundary values are taken from the sampled boundaries so that the
        extremes include dU and dU_o, which rarely fall on nodes.
        """
        vals = [self._interior_values]
        for comp in range(-1, len(self.domain.inner)):
            b = self.boundary_values(comp)
            if b.size:
                vals.append(b)
        allv = np.concatenate(vals)
        return float(np.min(allv)), float(np.max(allv))

    def boundary_points(self, component=-1):
        """Centroids of the marched boundary of U (component -1) or of U_o[component]."""
        return self._boundary_points(component)

    def _boundary_points(self, component):
        key = ("_bpts", component)
        cache = self.__dict__.setdefault("_bcache", {})
        if key in cache:
            return cache[key]
        if component < 0:
            sdf = self.outer_sdf
        else:
            sdf = self.domain.inner[component].sdf(self.points)
        _, cents, _, _ = _march(sdf, self.grid, 0.0)
        cache[key] = cents
        return cents

    def boundary_values(self, component=-1):
        """Samples of f on dU (component -1) or on one horizon component."""
        pts = self._boundary_points(component)
        if pts.size == 0:
            return np.zeros(0)
        if self.profile is not None:
            with np.errstate(invalid="ignore"):
                v = np.asarray(self.profile.value(pts), dtype=float)
            if component >= 0 and not np.all(np.isfinite(v)):
                v = self._horizon_fit(component)
            return v[np.isfinite(v)]
        if component < 0:
            return _interpolate(self._values, self.grid, pts)
        return self._horizon_fit(component)

    def _horizon_fit(self, component):
        """Boundary value of f on a horizon from a fit f ~ a + b sqrt(d) in the collar.

        |Df| blows up like d^{-1/2} at a minimal boundary, so the square-root
        model captures the leading behaviour; per-sector fits give the spread.
        """
        comp = self.domain.inner[component]
        d = comp.sdf(self.points)
        h = float(np.max(self.grid.spacing))
        near = (d > 0) & (d < 4 * h) & np.isfinite(self._values) & (self.domain.component_of(self.points) == component)
        if np.count_nonzero(near) < 3:
            return np.zeros(0)
        s = np.sqrt(d[near])
        y = self._values[near]
        pts = self.points[near]
        c = np.asarray(getattr(comp, "center", np.zeros(self.n)))
        sector = (pts[:, 0] >= c[0]).astype(int) + 2 * (pts[:, 1] >= c[1]).astype(int)
        fits = []
        for k in range(4):
            sel = sector == k
            if np.count_nonzero(sel) >= 3:
                A = np.stack([np.ones(np.count_nonzero(sel)), s[sel]], axis=1)
                coef, *_ = np.linalg.lstsq(A, y[sel], rcond=None)
                fits.append(coef[0])
        return np.asarray(fits)

    def boundary_level_value(self) -> float:
        """Height of the outer boundary level set (mean of f over dU)."""
        b = self.boundary_values(-1)
        if b.size == 0:
            raise DomainError("f has no finite samples on dU; supply values beyond U")
        return float(np.mean(b))

    def fill_value(self, component) -> float:
        if self._fill_values is not None:
            return self._fill_values[component]
        b = self.boundary_values(component)
        if b.size == 0:
            raise DomainError(f"cannot sample f on horizon component {component}")
        return float(np.mean(b))

    def filled_values(self) -> np.ndarray:
        """Node values of the filled function (constant on each U_o component)."""
        out = np.array(self._values)
        if self.domain.inner:
            comp = self.domain.component_of(self.points)
            inside = self.inner_sdf < 0
            for k in range(len(self.domain.inner)):
                out[inside & (comp == k)] = self.fill_value(k)
        return out

    # -- level sets and integrals (thin wrappers, see level_sets / volume_integral)
    def level_set(self, h, eps_reg=None):
        from .level_sets import extract_level_set

        return extract_level_set(self, h, eps_reg=eps_reg)

    @cached_property
    def boundary_area(self) -> float:
        a = self.domain.boundary_area()
        if a is not None:
            return float(a)
        areas, _, _, _ = _march(self.outer_sdf, self.grid, 0.0)
        return float(areas.sum())

    @cached_property
    def domain_volume(self) -> float:
        v = self.domain.volume()
        if v is not None:
            return float(v)
        return volume_integral(self, 1.0, "filled")

    def horizon_areas(self):
        out = []
        for k, comp in enumerate(self.domain.inner):
            a = comp.area()
            if a is None:
                a = float(_march(comp.sdf(self.points), self.grid, 0.0)[0].sum())
            out.append(float(a))
        return out

    def horizon_volumes(self):
        out = []
        for comp in self.domain.inner:
            v = comp.volume()
            if v is None:
                sub = ScalarField(Domain(self.n, comp), self.grid, np.zeros(self.grid.resolution))
                v = volume_integral(sub, 1.0, "filled")
            out.append(float(v))
        return out

    def graph_volume(self, region="whole"):
        W = np.sqrt(1.0 + self.slope**2)
        return volume_integral(self, W, region)

    def sublevel_volume(self, h):
        return volume_integral(self, 1.0, ("sublevel", h))

    def bulk_curvature_integral(self, h1, h2):
        from .geometry import scalar_curvature_array

        grad, hess = self.derivative_arrays()
        R = scalar_curvature_array(grad, hess)
        return volume_integral(self, R, ("shell", h1, h2))

    def excess_integrals(self, h_ref):
        """(int (fbar - h)_+, int (fbar - h)_-) over U with the horizon filled."""
        fbar = self.filled_values()
        up = volume_integral(self, fbar - h_ref, ("filled-superlevel", h_ref), values=fbar)
        down = volume_integral(self, h_ref - fbar, ("filled-sublevel", h_ref), values=fbar)
        return float(up), float(down)

    def shifted(self, dh):
        """Vertical translation f -> f + dh (the field is immutable)."""
        prof = None
        if self.profile is not None:
            p = self.profile
            prof = AnalyticProfile(lambda x, p=p: p.value(x) + dh, p.grad, p.hess, p.radial, p.description)
        fills = None if self._fill_values is None else [v + dh for v in self._fill_values]
        out = ScalarField(self.domain, self.grid, self._values + dh, profile=prof, source=self.source,
                          slope_cap=self.slope_cap, label=self.label, radial_monotone=self.radial_monotone,
                          fill_values=fills)
        # derivatives are translation invariant
        for key in ("_fd", "_analytic"):
            if key in self.__dict__:
                out.__dict__[key] = self.__dict__[key]
        return out

    def __repr__(self):
        return f"ScalarField(n={self.n}, resolution={self.grid.resolution}, source={self.source!r}, label={self.label!r})"


# --------------------------------------------------------------------------- grid kernels

def _cell_view(a, offset):
    """View of node array ``a`` at corner ``offset`` of every cell."""
    sl = tuple(slice(o, a.shape[i] - 1 + o) for i, o in enumerate(offset))
    return a[sl]


def _cell_minmax(a):
    n = a.ndim
    corners = cube_corners(n)
    lo = _cell_view(a, corners[0]).copy()
    hi = lo.copy()
    finite = np.isfinite(lo)
    for c in corners[1:]:
        v = _cell_view(a, c)
        np.fmin(lo, v, out=lo)
        np.fmax(hi, v, out=hi)
        finite &= np.isfinite(v)
    return lo, hi, finite


def _gather(a, cells, n):
    """Corner values (N, 2**n, ...) of ``a`` at the given lower-corner cell indices."""
    corners = cube_corners(n)
    idx = cells[:, None, :] + corners[None, :, :]
    return a[tuple(idx[..., i] for i in range(n))]


def _march(values, grid: GridSpec, level, attributes=None, cells_minmax=None):
    """Marching simplices on a node array: (areas, centroids, attrs, owner-cells)."""
    n = values.ndim
    if cells_minmax is None:
        lo, hi, finite = _cell_minmax(values)
    else:
        lo, hi, finite = cells_minmax
    crossing = finite & (lo < level) & (hi >= level)
    cells = np.argwhere(crossing)
    if cells.size == 0:
        d = 0 if attributes is None else attributes.shape[-1]
        return np.zeros(0), np.zeros((0, n)), (None if attributes is None else np.zeros((0, d))), np.zeros((0, n), int)
    spacing = grid.spacing
    origin = np.asarray(grid.lo)
    corner_vals = _gather(values, cells, n)  # (C, 2^n)
    simp = kuhn_simplices(n)
    corners = cube_corners(n).astype(float)
    sv = corner_vals[:, simp].reshape(-1, n + 1)
    base = origin + cells * spacing  # (C, n)
    sp = (base[:, None, None, :] + corners[simp][None, :, :, :] * spacing).reshape(-1, n + 1, n)
    sattr = None
    if attributes is not None:
        ca = _gather(attributes, cells, n)  # (C, 2^n, d)
        sattr = ca[:, simp, :].reshape(-1, n + 1, ca.shape[-1])
    areas, cents, attrs, owner = cross_sections(sv, sp, level, sattr)
    owner_cells = cells[owner // simp.shape[0]]
    return areas, cents, attrs, owner_cells


def _interpolate(values, grid: GridSpec, pts):
    """Multilinear interpolation of a node array at points (NaN-aware)."""
    pts = np.atleast_2d(pts)
    n = grid.n
    spacing = grid.spacing
    rel = (pts - np.asarray(grid.lo)) / spacing
    base = np.clip(np.floor(rel).astype(int), 0, np.asarray(grid.resolution) - 2)
    t = rel - base
    corners = cube_corners(n)
    total = np.zeros(len(pts))
    weight = np.zeros(len(pts))
    for c in corners:
        w = np.prod(np.where(c[None, :] == 1, t, 1 - t), axis=1)
        v = values[tuple((base + c)[:, i] for i in range(n))]
        ok = np.isfinite(v)
        total += np.where(ok, w * v, 0.0)
        weight += np.where(ok, w, 0.0)
    with np.errstate(invalid="ignore"):
        return total / weight


# --------------------------------------------------------------------------- module API

def gradient(field: ScalarField, node=None, source=None):
    """Df at ``node`` (index tuple), or the full (..., n) node array when ``node`` is None."""
    grad, _ = field.derivative_arrays(source)
    if node is None:
        return grad
    return grad[field._check_node(node)]


def hessian(field: ScalarField, node=None, source=None):
    """Hess f at ``node``, or the full (..., n, n) node array."""
    _, hess = field.derivative_arrays(source)
    if node is None:
        return hess
    return hess[field._check_node(node)]


def _constraints(field: ScalarField, region, values=None):
    """Implicit node arrays whose common negative set is the region."""
    f = field.values if values is None else values
    out_sdf = field.outer_sdf
    cons = [out_sdf]
    kind = region if isinstance(region, str) else region[0]
    if not kind.startswith("filled") and field.domain.inner:
        cons.append(-field.inner_sdf)
    if not isinstance(region, str) or kind not in ("whole", "filled"):
        fb = field.filled_values() if values is None else values
        # horizon nodes carry the fill value so sub-level tests stay defined there
        fb = np.where(np.isfinite(fb), fb, np.nanmax(fb) + 1.0)
        if kind in ("sublevel", "filled-sublevel"):
            cons.append(fb - region[1])
        elif kind in ("superlevel", "filled-superlevel"):
            cons.append(region[1] - fb)
        elif kind == "shell":
            cons.append(fb - region[2])
            cons.append(region[1] - fb)
        else:
            raise ValueError(f"unknown region {region!r}")
    elif kind not in ("whole", "filled"):
        raise ValueError(f"unknown region {region!r}")
    del f
    return cons


def volume_integral(field: ScalarField, density, region="whole", values=None) -> float:
    """Euclidean integral of ``density`` over a region of U.

    ``region`` is ``"whole"`` (U \\ U_o), ``"filled"`` (all of U),
    ``("sublevel", h)``, ``("superlevel", h)``, ``("shell", h1, h2)`` or the
    ``filled-`` variants that keep U_o.  ``density`` is a scalar, a node
    array, or a callable on points.  Cells strictly inside every constraint
    use the mean of their corner densities; cut cells are split into Kuhn
    simplices and weighted by the exact volume fraction of the linearly
    interpolated constraints.  An empty region gives 0.
    """
    n = field.n
    if callable(density):
        dens = np.asarray(density(field.points), dtype=float)
    else:
        dens = np.broadcast_to(np.asarray(density, dtype=float), field.grid.resolution)
    cons = _constraints(field, region, values)
    cvol = field.grid.cell_volume

    full = None
    empty = None
    for c in cons:
        lo, hi, fin = _cell_minmax(np.where(np.isfinite(c), c, 1.0))
        f_ = hi < 0
        e_ = lo >= 0
        full = f_ if full is None else (full & f_)
        empty = e_ if empty is None else (empty | e_)
    partial = ~full & ~empty

    # full cells: mean of corner densities (NaN corners skipped)
    corners = cube_corners(n)
    tot = np.zeros(full.shape)
    cnt = np.zeros(full.shape)
    for c in corners:
        v = _cell_view(dens, c)
        ok = np.isfinite(v)
        tot += np.where(ok, v, 0.0)
        cnt += ok
    with np.errstate(invalid="ignore"):
        cell_mean = np.where(cnt > 0, tot / np.maximum(cnt, 1), 0.0)
    total = float(np.sum(cell_mean[full])) * cvol

    cells = np.argwhere(partial)
    if cells.size:
        simp = kuhn_simplices(n)
        weight = np.ones((cells.shape[0], simp.shape[0]))
        for c in cons:
            cv = _gather(np.where(np.isfinite(c), c, 1.0), cells, n)
            sv = cv[:, simp].reshape(-1, n + 1)
            weight *= sublevel_fraction(sv, 0.0).reshape(cells.shape[0], simp.shape[0])
        dv = _gather(np.asarray(dens), cells, n)[:, simp]  # (C, S, n+1)
        ok = np.isfinite(dv)
        with np.errstate(invalid="ignore"):
            smean = np.where(ok.any(axis=-1), np.where(ok, dv, 0.0).sum(-1) / np.maximum(ok.sum(-1), 1), 0.0)
        total += float(np.sum(weight * smean)) * cvol / math.factorial(n)
    return total
