"""Rotationally symmetric graphs evaluated without a grid.

Level sets of a radially increasing f are round spheres, so every surface
integral is a closed-form product and every volume integral is a 1-D radial
quadrature.  When a horizon is present (f' -> infinity at r_in) radial
integrals are taken in s = sqrt(r - r_in), which removes the inverse
square-root singularity of f' from the integrand.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from ._validation import DomainError, ball_volume, check_dimension, sphere_area
from .level_sets import LevelSet, regularity_threshold

__all__ = ["RadialGraph", "radial_frame_derivatives", "radial_curvatures"]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def radial_frame_derivatives(x, df, d2f):
    """Df and Hess f at points x (..., n) for f(|x|) with derivative callables."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    n = x.shape[-1]
    safe = np.where(r > 0, r, 1.0)
    u = x / safe[..., None]
    d1 = np.asarray(df(r), dtype=float)
    d2 = np.asarray(d2f(r), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        tang = np.where(r > 0, d1 / safe, d2)
    grad = d1[..., None] * u
    uu = u[..., :, None] * u[..., None, :]
    eye = np.eye(n)
    hess = d2[..., None, None] * uu + tang[..., None, None] * (eye - uu)
    return grad, hess


def radial_curvatures(n, r, d1, d2):
    """Principal curvatures (radial, tangential) and R of a radial graph.

    kappa_rad = f'' / W^3, kappa_tan = f' / (r W), and R is twice the second
    elementary symmetric function of the n principal curvatures.
    """
    W = np.sqrt(1.0 + d1**2)
    kr = d2 / W**3
    kt = d1 / (r * W)
    R = (n - 1) * kt * (2 * kr + (n - 2) * kt)
    return kr, kt, R


class RadialGraph:
    """f(|x|) over the annulus r_in < |x| < R (ball when r_in = 0).

    Parameters
    ----------
    n : ambient dimension of the base.
    f, df, d2f : radial profile and its first two derivatives.
    R : outer radius of U.
    r_inner : horizon radius (0 for no horizon).
    inverse : optional closed-form r(h); otherwise bisection.
    breakpoints : radii where the profile is only piecewise smooth.
    """

    def __init__(self, n, f, df, d2f, R, r_inner=0.0, inverse=None, breakpoints=(), label="",
                 monotone=True, panels=48):
        self.n = check_dimension(n)
        self.f, self.df, self.d2f = f, df, d2f
        self.R = float(R)
        self.r_inner = float(r_inner)
        if not 0 <= self.r_inner < self.R:
            raise ValueError("need 0 <= r_inner < R")
        self._inverse = inverse
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints if self.r_inner < b < self.R))
        self.label = label
        self.radial_monotone = bool(monotone)
        self.panels = int(panels)
        self.omega = sphere_area(self.n)

    # -- scalar profile helpers
    def _f(self, r):
        return np.asarray(self.f(np.asarray(r, dtype=float)), dtype=float)

    @property
    def has_horizon(self) -> bool:
        return self.r_inner > 0

    @property
    def source(self):
        return "analytic"

    @cached_property
    def _range(self):
        rs = np.linspace(self.r_inner, self.R, 2001)
        vals = self._f(rs)
        vals = vals[np.isfinite(vals)]
        return float(vals.min()), float(vals.max())

    def value_range(self):
        return self._range

    def boundary_level_value(self) -> float:
        return float(self._f(self.R))

    def fill_value(self, component=0) -> float:
        if not self.has_horizon:
            raise DomainError("no horizon to fill")
        return float(self._f(self.r_inner))

    @cached_property
    def increasing(self) -> bool:
        a = self.r_inner if self.has_horizon else 0.0
        return bool(self._f(self.R) >= self._f(a))

    def radius_of(self, h) -> float:
        """Radius of the sphere {f = h}, clipped to [r_in, R].

        Beyond the range of f the nearer end of the annulus is returned; a
        plateau (as outside a gravity well) resolves to its outer end.
        """
        lo, hi = self._range
        h = float(h)
        if h >= hi:
            return self.R if self.increasing else self.r_inner
        if h <= lo:
            return self.r_inner if self.increasing else self.R
        if self._inverse is not None:
            return float(np.clip(self._inverse(h), self.r_inner, self.R))
        rs = np.linspace(self.r_inner, self.R, 1025)
        vals = self._f(rs) - h
        ok = np.isfinite(vals)
        change = np.nonzero(ok[:-1] & ok[1:] & (vals[:-1] * vals[1:] <= 0))[0]
        if change.size == 0:
            return self.R
        j = change[-1]
        if vals[j + 1] == 0:
            return float(rs[j + 1])
        return float(brentq(lambda r: float(self._f(r)) - h, rs[j], rs[j + 1], xtol=1e-14, rtol=1e-15))

    # -- derivatives
    def derivatives_at_radius(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        x = np.zeros((r.size, self.n))
        x[:, 0] = r
        return radial_frame_derivatives(x, self.df, self.d2f)

    def derivatives_at_points(self, x):
        return radial_frame_derivatives(x, self.df, self.d2f)

    @cached_property
    def sample_radii(self):
        a = self.r_inner
        t = np.linspace(0.0, 1.0, 401)[1:]
        if self.has_horizon:
            # cluster toward the horizon but stay out of the steepest collar
            r = a + (self.R - a) * (1e-3 + (1 - 1e-3) * t**2)
        else:
            r = a + (self.R - a) * t
        return r

    def sample_derivatives(self, include_near_boundary=False):
        r = self.sample_radii
        g, H = self.derivatives_at_radius(r)
        pts = np.zeros((r.size, self.n))
        pts[:, 0] = r
        return pts, g, H

    # -- level sets
    def level_set(self, h, eps_reg=None) -> LevelSet:
        n = self.n
        if eps_reg is None:
            eps_reg = regularity_threshold(self)
        lo, hi = self._range
        h = float(h)
        if h > hi or h <= lo:
            return LevelSet(h, n, np.zeros(0), np.zeros((0, n)), np.zeros((0, n)), np.zeros((0, n, n)),
                            eps_reg, radial=True)
        r = self.radius_of(h)
        if r <= self.r_inner:
            r = self.r_inner
        g, H = self.derivatives_at_radius(r)
        cent = np.zeros((1, n))
        cent[0, 0] = r
        d1 = float(g[0, 0])
        over = np.array([math.copysign((n - 1) / r, d1 if d1 != 0 else 1.0)])
        return LevelSet(h, n, np.array([self.omega * r ** (n - 1)]), cent, g, H, eps_reg,
                        radial=True, hcirc_override=over, meta={"radius": r})

    # -- radial quadrature
    def integrate(self, g, a=None, b=None):
        """Integral of g(r) dr over [a, b], panelled at breakpoints."""
        a = self.r_inner if a is None else float(a)
        b = self.R if b is None else float(b)
        if b <= a:
            return 0.0
        cuts = [a] + [c for c in self.breakpoints if a < c < b] + [b]
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            total += self._integrate_piece(g, lo, hi)
        return total

    def _integrate_piece(self, g, a, b):
        if self.has_horizon:
            r0 = self.r_inner
            sa, sb = math.sqrt(max(a - r0, 0.0)), math.sqrt(b - r0)
            edges = np.linspace(sa, sb, self.panels + 1)
            mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
            half = 0.5 * (edges[1:] - edges[:-1])[:, None]
            s = (mid + half * _GL_X[None, :]).ravel()
            r = r0 + s**2
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.asarray(g(r), dtype=float) * 2 * s
            vals = np.where(np.isfinite(vals), vals, 0.0)
            return float(np.sum(vals.reshape(half.shape[0], -1) * _GL_W[None, :] * half))
        edges = np.linspace(a, b, self.panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        r = (mid + half * _GL_X[None, :]).ravel()
        vals = np.asarray(g(r), dtype=float)
        return float(np.sum(vals.reshape(half.shape[0], -1) * _GL_W[None, :] * half))

    def shell(self, density, a=None, b=None):
        """Integral over a < |x| < b of a radial density, in dV_delta."""
        n, om = self.n, self.omega
        return self.integrate(lambda r: density(r) * om * r ** (n - 1), a, b)

    # -- areas and volumes
    @property
    def boundary_area(self) -> float:
        return self.omega * self.R ** (self.n - 1)

    @property
    def domain_volume(self) -> float:
        """vol(U), horizon included."""
        return ball_volume(self.n) * self.R**self.n

    def horizon_areas(self):
        return [self.omega * self.r_inner ** (self.n - 1)] if self.has_horizon else []

    def horizon_volumes(self):
        return [ball_volume(self.n) * self.r_inner**self.n] if self.has_horizon else []

    def graph_volume(self, region="whole"):
        """Area of the graph over U (or over {f < h} / {f > h} for a tuple region)."""
        W = lambda r: np.sqrt(1.0 + np.asarray(self.df(r)) ** 2)
        if region == "whole":
            return self.shell(W)
        kind, h = region[0], float(region[1])
        r = self.radius_of(h)
        inner, outer = self.shell(W, self.r_inner, r), self.shell(W, r, self.R)
        low, high = (inner, outer) if self.increasing else (outer, inner)
        if kind == "sublevel":
            return low
        if kind == "superlevel":
            return high
        raise ValueError(f"unknown region {region!r}")

    def sublevel_volume(self, h):
        r = self.radius_of(h)
        if self.increasing:
            return ball_volume(self.n) * (r**self.n - self.r_inner**self.n)
        return ball_volume(self.n) * (self.R**self.n - r**self.n)

    def scalar_curvature_radial(self, r):
        r = np.asarray(r, dtype=float)
        return radial_curvatures(self.n, r, np.asarray(self.df(r)), np.asarray(self.d2f(r)))[2]

    def bulk_curvature_integral(self, h1, h2):
        """Integral of R dV_delta over {h1 < f < h2}."""
        a, b = sorted((self.radius_of(h1), self.radius_of(h2)))
        return self.shell(self.scalar_curvature_radial, a, b)

    def excess_integrals(self, h_ref):
        """(int (fbar - h)_+, int (fbar - h)_-) over U, horizon filled at f(r_in)."""
        pos = lambda r: np.maximum(self._f(r) - h_ref, 0.0)
        neg = lambda r: np.maximum(h_ref - self._f(r), 0.0)
        # split at r(h_ref) so the kink of (.)_+ sits on a panel edge
        r_ref = self.radius_of(h_ref)
        cuts = [self.r_inner, self.R] if not self.r_inner < r_ref < self.R else [self.r_inner, r_ref, self.R]
        up = down = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            up += self.shell(pos, a, b)
            down += self.shell(neg, a, b)
        if self.has_horizon:
            d = self.fill_value() - h_ref
            v = self.horizon_volumes()[0]
            up += v * max(d, 0.0)
            down += v * max(-d, 0.0)
        return float(up), float(down)

    def shifted(self, dh):
        """Vertical translation f -> f + dh."""
        f, inv = self.f, self._inverse
        return RadialGraph(self.n, lambda r: f(r) + dh, self.df, self.d2f, self.R, self.r_inner,
                           None if inv is None else (lambda h: inv(h - dh)), self.breakpoints, self.label,
                           self.radial_monotone, self.panels)

    def __repr__(self):
        return f"RadialGraph(n={self.n}, R={self.R}, r_inner={self.r_inner}, label={self.label!r})"
