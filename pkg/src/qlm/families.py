"""Closed-form graph families.

=============  ==========================================  ============
kind           profile                                     parameters
=============  ==========================================  ============
schwarzschild  f'^2 = (2m/r^{n-2}) / (1 - 2m/r^{n-2})     m
bump           a exp(-1 / (1 - |x/R|^2))                   a
cap            -sqrt(rho^2 - |x|^2)                        rho
gravity_well   -d (1 - |x/w|^2)^3 inside |x| < w, else 0   w, d
constant       c                                           c
saddle         a (x_1^2 - x_2^2)                           a
paraboloid     sum_i (x_i / a_i)^2 over {f < R^2}          axes
=============  ==========================================  ============

Radial kinds instantiate as :class:`RadialGraph` in analytic mode; every
kind instantiates as a gridded :class:`ScalarField` with its exact profile
attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from ._validation import ConfigError, check_dimension
from .domain import AnalyticProfile, Ball, Domain, GridSpec, ImplicitRegion, ScalarField
from .radial import RadialGraph, radial_frame_derivatives

__all__ = ["FamilySpec", "instantiate", "KINDS", "RADIAL_KINDS", "radial_profile", "tangherlini_profile"]

RADIAL_KINDS = ("schwarzschild", "bump", "cap", "gravity_well", "constant")
KINDS = RADIAL_KINDS + ("saddle", "paraboloid")

_DEFAULTS = {
    "schwarzschild": {"m": 1.0},
    "bump": {"a": -0.1},
    "cap": {"rho": 1.0},
    "gravity_well": {"w": 0.2, "d": 5.0},
    "constant": {"c": 0.0},
    "saddle": {"a": 0.5},
    "paraboloid": {"axes": [1.0, 1.5, 2.0]},
}

# whether each kind is expected to pass the admissibility checks
_EXPECT_ADMISSIBLE = {
    "schwarzschild": True,
    "bump": False,
    "cap": True,
    "gravity_well": False,
    "constant": True,
    "saddle": False,
    "paraboloid": True,
}

_GL48 = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    n: int = 3
    params: dict = dc_field(default_factory=dict)
    R: float = 4.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown family kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        try:
            check_dimension(self.n)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        merged = dict(_DEFAULTS[self.kind])
        merged.update(self.params or {})
        object.__setattr__(self, "params", merged)
        if not (np.isfinite(self.R) and self.R > 0):
            raise ConfigError("outer radius R must be positive")
        p = merged
        if self.kind == "schwarzschild":
            if p["m"] < 0:
                raise ConfigError("mass m must be >= 0")
            if self.n < 3:
                raise ConfigError("schwarzschild needs n >= 3")
            if p["m"] > 0 and self.horizon_radius >= self.R:
                raise ConfigError(
                    f"horizon radius {self.horizon_radius:.6g} is not inside U (R = {self.R:.6g})")
        elif self.kind == "cap" and not p["rho"] > self.R:
            raise ConfigError("cap needs rho > R")
        elif self.kind == "gravity_well":
            if not (0 < p["w"] < self.R and p["d"] > 0):
                raise ConfigError("gravity well needs 0 < w < R and d > 0")
        elif self.kind == "paraboloid":
            axes = np.broadcast_to(np.asarray(p["axes"], dtype=float), (self.n,))
            if np.any(axes <= 0):
                raise ConfigError("paraboloid axes must be positive")
        elif self.kind == "saddle" and self.n < 2:
            raise ConfigError("saddle needs n >= 2")

    @property
    def horizon_radius(self) -> float:
        if self.kind != "schwarzschild" or self.params["m"] == 0:
            return 0.0
        return (2.0 * self.params["m"]) ** (1.0 / (self.n - 2))

    @property
    def expect_admissible(self) -> bool:
        return _EXPECT_ADMISSIBLE[self.kind]

    @property
    def radial(self) -> bool:
        return self.kind in RADIAL_KINDS

    @property
    def label(self) -> str:
        items = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}(n={self.n},R={self.R:g},{items})"

    def with_params(self, **params):
        p = dict(self.params)
        p.update(params)
        return FamilySpec(self.kind, self.n, p, self.R)

    def to_dict(self):
        return {"kind": self.kind, "n": self.n, "R": self.R, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError("family stanza needs a 'kind'")
        known = {"kind", "n", "R", "params"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown family keys: {', '.join(sorted(extra))}")
        return cls(str(d["kind"]), int(d.get("n", 3)), dict(d.get("params", {})), float(d.get("R", 4.0)))


# --------------------------------------------------------------------------- radial profiles

def tangherlini_profile(n, m):
    """(f, f', f'', inverse or None, r0) for the Schwarzschild-Tangherlini graph.

    Closed forms for n = 3, 4; general n integrates f' from the horizon in
    s = sqrt(r - r0).
    """
    k = n - 2
    r0 = (2.0 * m) ** (1.0 / k)

    def df(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sqrt(2 * m / (r**k - 2 * m))

    def d2f(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -0.5 * math.sqrt(2 * m) * k * r ** (k - 1) * (r**k - 2 * m) ** -1.5

    if n == 3:
        def f(r):
            with np.errstate(invalid="ignore"):
                return np.sqrt(8 * m * (np.asarray(r, dtype=float) - 2 * m))

        def inv(h):
            return 2 * m + h * h / (8 * m)
        return f, df, d2f, inv, r0
    if n == 4:
        a = math.sqrt(2 * m)

        def f(r):
            with np.errstate(invalid="ignore"):
                return a * np.arccosh(np.asarray(r, dtype=float) / a)

        def inv(h):
            return a * math.cosh(h / a)
        return f, df, d2f, inv, r0

    x, w = _GL48

    def f(r):
        r = np.asarray(r, dtype=float)
        out = np.full(r.shape, np.nan)
        ok = r >= r0
        S = np.sqrt(r[ok] - r0)
        s = 0.5 * S[..., None] * (x + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = 2 * s * np.sqrt(2 * m / ((r0 + s * s) ** k - 2 * m))
        g = np.where(np.isfinite(g), g, 0.0)
        out[ok] = 0.5 * S * np.sum(g * w, axis=-1)
        return out

    return f, df, d2f, None, r0


def radial_profile(spec: FamilySpec):
    """(f, f', f'', inverse, r_inner, breakpoints) for a radial family."""
    p, n, R = spec.params, spec.n, spec.R
    kind = spec.kind
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    if kind == "schwarzschild":
        if p["m"] == 0:
            return zero, zero, zero, None, 0.0, ()
        f, df, d2f, inv, r0 = tangherlini_profile(n, p["m"])
        return f, df, d2f, inv, r0, ()
    if kind == "constant":
        c = float(p["c"])
        return (lambda r: np.full_like(np.asarray(r, dtype=float), c)), zero, zero, None, 0.0, ()
    if kind == "cap":
        rho = float(p["rho"])

        def f(r):
            return -np.sqrt(rho**2 - np.asarray(r, dtype=float) ** 2)

        def df(r):
            r = np.asarray(r, dtype=float)
            return r / np.sqrt(rho**2 - r**2)

        def d2f(r):
            r = np.asarray(r, dtype=float)
            return rho**2 / (rho**2 - r**2) ** 1.5

        def inv(h):
            return math.sqrt(max(rho**2 - h * h, 0.0))
        return f, df, d2f, inv, 0.0, ()
    if kind == "gravity_well":
        w, d = float(p["w"]), float(p["d"])

        def f(r):
            s2 = np.minimum((np.asarray(r, dtype=float) / w) ** 2, 1.0)
            return -d * (1 - s2) ** 3

        def df(r):
            r = np.asarray(r, dtype=float)
            s2 = np.minimum((r / w) ** 2, 1.0)
            return 6 * d * r / w**2 * (1 - s2) ** 2

        def d2f(r):
            s2 = np.minimum((np.asarray(r, dtype=float) / w) ** 2, 1.0)
            return 6 * d / w**2 * (1 - s2) * (1 - 5 * s2)

        def inv(h):
            if h >= 0:
                return w
            return w * math.sqrt(1 - (-h / d) ** (1 / 3))
        return f, df, d2f, inv, 0.0, (w,)
    if kind == "bump":
        a = float(p["a"])

        def parts(r):
            s = np.asarray(r, dtype=float) / R
            inside = s < 1
            q = np.where(inside, 1 - s * s, 1.0)
            with np.errstate(over="ignore", under="ignore"):
                val = np.where(inside, a * np.exp(-1 / q), 0.0)
            ps = -2 * s / q**2
            pss = -2 / q**2 - 8 * s * s / q**3
            return val, ps, pss, inside

        def f(r):
            return parts(r)[0]

        def df(r):
            val, ps, _, inside = parts(r)
            return np.where(inside, val * ps / R, 0.0)

        def d2f(r):
            val, ps, pss, inside = parts(r)
            return np.where(inside, val * (ps * ps + pss) / R**2, 0.0)
        return f, df, d2f, None, 0.0, ()
    raise ConfigError(f"{kind} is not a radial family")


# --------------------------------------------------------------------------- instantiation

def _analytic_profile(spec: FamilySpec) -> AnalyticProfile:
    n = spec.n
    if spec.radial:
        f, df, d2f, _, _, _ = radial_profile(spec)
        return AnalyticProfile(
            lambda x: f(np.linalg.norm(np.asarray(x, dtype=float), axis=-1)),
            lambda x: radial_frame_derivatives(x, df, d2f)[0],
            lambda x: radial_frame_derivatives(x, df, d2f)[1],
            radial=True, description=spec.label,
        )
    if spec.kind == "saddle":
        a = float(spec.params["a"])
        sgn = np.zeros(n)
        sgn[0], sgn[1] = 1.0, -1.0
        H = np.diag(2 * a * sgn)
        return AnalyticProfile(
            lambda x: a * (np.asarray(x)[..., 0] ** 2 - np.asarray(x)[..., 1] ** 2),
            lambda x: 2 * a * np.asarray(x, dtype=float) * sgn,
            lambda x: np.broadcast_to(H, np.asarray(x).shape[:-1] + (n, n)).copy(),
            description=spec.label,
        )
    axes = np.broadcast_to(np.asarray(spec.params["axes"], dtype=float), (n,))
    inv2 = 1.0 / axes**2
    H = np.diag(2 * inv2)
    return AnalyticProfile(
        lambda x: np.sum(np.asarray(x, dtype=float) ** 2 * inv2, axis=-1),
        lambda x: 2 * np.asarray(x, dtype=float) * inv2,
        lambda x: np.broadcast_to(H, np.asarray(x).shape[:-1] + (n, n)).copy(),
        description=spec.label,
    )


def family_domain(spec: FamilySpec) -> Domain:
    """Ball of radius R; for the paraboloid the ellipsoid {f < R^2}, so dU is a level set."""
    origin = (0.0,) * spec.n
    if spec.kind == "paraboloid":
        axes = np.broadcast_to(np.asarray(spec.params["axes"], dtype=float), (spec.n,))
        amin = float(axes.min())
        R = spec.R

        def sdf(x):
            return (np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2 / axes**2, axis=-1)) - R) * amin

        vol = math.pi ** (spec.n / 2) / math.gamma(spec.n / 2 + 1) * R**spec.n * float(np.prod(axes))
        half = tuple(float(a * R) for a in axes)
        return Domain(spec.n, ImplicitRegion(sdf, tuple(-h for h in half), half, exact_volume=vol))
    inner = (Ball(origin, spec.horizon_radius),) if spec.horizon_radius > 0 else ()
    return Domain(spec.n, Ball(origin, spec.R), inner)


def instantiate(spec: FamilySpec, grid: GridSpec | None = None, mode: str = "analytic",
                resolution: int = 64, source: str | None = None, boundary: str = "one-sided"):
    """Build the graph for ``spec``.

    ``mode="analytic"`` returns a :class:`RadialGraph` for radial kinds.
    ``mode="grid"`` (or a non-radial kind) samples the profile on ``grid``,
    or on a cubic grid of ``resolution`` nodes per axis around U, and
    attaches the exact profile.  ``source`` picks where derivatives come
    from (``"analytic"`` by default, ``"fd"`` for finite differences).
    """
    if mode not in ("analytic", "grid"):
        raise ConfigError("mode must be 'analytic' or 'grid'")
    if mode == "analytic" and spec.radial:
        f, df, d2f, inv, r0, bps = radial_profile(spec)
        monotone = spec.kind != "bump" or spec.params["a"] <= 0
        return RadialGraph(spec.n, f, df, d2f, spec.R, r_inner=r0, inverse=inv, breakpoints=bps,
                           label=spec.label, monotone=monotone)
    domain = family_domain(spec)
    if grid is None:
        grid = GridSpec.around(domain, int(resolution), boundary=boundary)
    profile = _analytic_profile(spec)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        values = np.asarray(profile.value(grid.points()), dtype=float)
    fills = None
    if spec.horizon_radius > 0:
        f = radial_profile(spec)[0]
        fills = [float(f(spec.horizon_radius))]
        values = np.where(np.linalg.norm(grid.points(), axis=-1) >= spec.horizon_radius, values, np.nan)
    return ScalarField(domain, grid, values, profile=profile, source=source or "analytic", label=spec.label,
                       radial_monotone=spec.radial and spec.kind != "bump", fill_values=fills)
