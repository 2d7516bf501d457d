"""Level sets Sigma_h = {f = h}, their areas, and their two mean curvatures.

For a level set of f in the slice R^n the Euclidean mean curvature with
respect to the normal Df/|Df| is

    Hc = Lap f / |Df| - Hess f(Df, Df) / |Df|^3,

and its mean curvature inside the graph is H = Hc / sqrt(1 + |Df|^2).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

from ._parallel import ordered_map
from ._validation import NearCriticalError, check_graph, check_heights

__all__ = [
    "LevelSet",
    "AreaProfile",
    "extract_level_set",
    "level_mean_curvatures",
    "surface_integral",
    "area_profile",
    "default_ladder",
    "regularity_threshold",
]


@dataclass(frozen=True, eq=False)
class LevelSet:
    """Simplicial level set with per-facet samples of Df and Hess f.

    ``hcirc_override`` supplies the slice mean curvature on facets where
    |Df| = 0 (the boundary sphere of a flat graph), where the quotient
    formula is undefined.
    """

    height: float
    n: int
    areas: np.ndarray
    centroids: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    eps_reg: float = 0.0
    radial: bool = False
    hcirc_override: np.ndarray | None = None
    meta: dict = dc_field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return self.areas.size == 0

    @property
    def area(self) -> float:
        """Total (n-1)-area V(h)."""
        return float(np.sum(self.areas))

    @cached_property
    def slope(self) -> np.ndarray:
        return np.linalg.norm(self.grad, axis=-1)

    @cached_property
    def W(self) -> np.ndarray:
        return np.sqrt(1.0 + self.slope**2)

    @cached_property
    def critical_facets(self) -> np.ndarray:
        return np.nonzero(~(self.slope > self.eps_reg))[0]

    @property
    def truncated(self) -> bool:
        """The slice crosses grid cells with undefined corners (a horizon collar)."""
        return self.meta.get("truncated_cells", 0) > 0

    @property
    def regular(self) -> bool:
        return not self.empty and self.critical_facets.size == 0 and not self.truncated

    @cached_property
    def hcirc(self) -> np.ndarray:
        g, H = self.grad, self.hess
        s = self.slope
        lap = np.trace(H, axis1=-2, axis2=-1)
        hgg = np.einsum("fi,fij,fj->f", g, H, g)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = lap / s - hgg / s**3
        if self.hcirc_override is not None:
            out = np.where(s > 0, out, self.hcirc_override)
        return out

    @cached_property
    def H(self) -> np.ndarray:
        return self.hcirc / self.W

    @cached_property
    def mean_convex(self) -> bool:
        return bool(not self.empty and np.all(self.hcirc > 0))

    def summary(self):
        return {"height": self.height, "facets": int(self.areas.size), "area": self.area,
                "regular": self.regular, "radial": self.radial}


def regularity_threshold(field) -> float:
    """1e-8 times the range of |Df| over the sampled interior."""
    cached = getattr(field, "_eps_reg_cache", None)
    if cached is not None:
        return cached
    _, grad, _ = field.sample_derivatives()
    s = np.linalg.norm(grad, axis=-1)
    s = s[np.isfinite(s)]
    eps = 1e-8 * float(s.max() - s.min()) if s.size else 0.0
    try:
        field._eps_reg_cache = eps
    except AttributeError:
        pass
    return eps


def _empty(h, n, eps):
    return LevelSet(float(h), n, np.zeros(0), np.zeros((0, n)), np.zeros((0, n)), np.zeros((0, n, n)), eps)


def extract_level_set(field, h, eps_reg=None) -> LevelSet:
    """Sigma_h of a gridded or radial graph.

    Gridded fields use marching simplices over cells whose corners are all
    finite, with facet samples either evaluated from the analytic profile at
    the facet centroid or interpolated from the finite-difference node
    arrays.  Facets whose centroid lies more than half a cell outside U are
    dropped.  A slice that crosses cells with undefined corners (inside a
    horizon collar) is marked truncated and therefore not regular.  A
    height outside the range of f gives an empty set.
    """
    check_graph(field)
    h = float(h)
    from .domain import ScalarField, _march, _cell_minmax

    if not isinstance(field, ScalarField):
        return field.level_set(h, eps_reg=eps_reg)
    if eps_reg is None:
        eps_reg = regularity_threshold(field)
    n = field.n
    cache = field.__dict__
    if "_cellmm" not in cache:
        cache["_cellmm"] = _cell_minmax(np.asarray(field.values))
    use_profile = field.source == "analytic"
    attrs = None
    if not use_profile:
        grad, hess = field.derivative_arrays()
        if "_attr" not in cache:
            cache["_attr"] = np.concatenate([grad, hess.reshape(hess.shape[:-2] + (n * n,))], axis=-1)
        attrs = cache["_attr"]
    areas, cents, fattr, _ = _march(np.asarray(field.values), field.grid, h, attrs, cache["_cellmm"])
    if areas.size == 0:
        return _empty(h, n, eps_reg)
    hg = float(np.max(field.grid.spacing))
    keep = field.domain.outer_sdf(cents) <= 0.5 * hg
    if field.domain.inner:
        keep &= field.domain.inner_sdf(cents) >= -0.5 * hg
    keep &= areas > 0
    areas, cents = areas[keep], cents[keep]
    if use_profile:
        g, H = field.derivatives_at_points(cents)
    else:
        fattr = fattr[keep]
        g, H = fattr[:, :n], fattr[:, n:].reshape(-1, n, n)
    ok = np.all(np.isfinite(g), axis=1) & np.all(np.isfinite(H), axis=(1, 2))
    lo, hi, finite = cache["_cellmm"]
    blocked = int(np.count_nonzero(~finite & (lo < h) & (hi >= h)))
    return LevelSet(h, n, areas[ok], cents[ok], g[ok], H[ok], eps_reg,
                    meta={"dropped_nonfinite": int(np.count_nonzero(~ok)), "truncated_cells": blocked})


def level_mean_curvatures(levelset: LevelSet):
    """Per-facet (Hc, H).  Raises :class:`NearCriticalError` on critical facets."""
    if levelset.critical_facets.size:
        raise NearCriticalError(
            f"{levelset.critical_facets.size} facets with |Df| <= {levelset.eps_reg:.3g} at h={levelset.height:.6g}",
            levelset.critical_facets,
        )
    return levelset.hcirc, levelset.H


def surface_integral(levelset: LevelSet, density) -> float:
    """Midpoint rule: sum of density(centroid) * facet area.

    ``density`` is a scalar, a per-facet array, or a callable taking the
    level set and returning per-facet values.
    """
    if levelset.empty:
        return 0.0
    if callable(density):
        vals = np.asarray(density(levelset), dtype=float)
    else:
        vals = np.broadcast_to(np.asarray(density, dtype=float), levelset.areas.shape)
    return float(np.sum(vals * levelset.areas))


def default_ladder(field, K: int = 200) -> np.ndarray:
    lo, hi = field.value_range()
    k = np.arange(1, K + 1)
    return lo + (k / K) * (hi - lo)


@dataclass
class AreaProfile:
    heights: np.ndarray
    V: np.ndarray
    Vprime_fd: np.ndarray
    Vprime_var: np.ndarray
    regular: np.ndarray
    boundary_area: float | None = None

    def rows(self):
        for i in range(len(self.heights)):
            yield (self.heights[i], self.V[i], self.Vprime_fd[i], self.Vprime_var[i], bool(self.regular[i]))

    def to_csv(self, path, fmt="{:.12g}"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["h", "V", "Vprime_fd", "Vprime_var", "regular"])
            for h, v, a, b, r in self.rows():
                w.writerow([fmt.format(h), fmt.format(v), fmt.format(a), fmt.format(b), int(r)])

    def monotonicity_violation(self) -> float:
        """Largest relative drop of V between consecutive heights (0 if non-decreasing)."""
        if len(self.V) < 2:
            return 0.0
        drops = np.maximum(self.V[:-1] - self.V[1:], 0.0)
        scale = max(float(np.max(self.V)), 1e-300)
        return float(np.max(drops) / scale)

    def boundary_excess(self) -> float:
        """max V / |dU| - 1 (negative when the bound holds)."""
        if not self.boundary_area:
            return float("nan")
        return float(np.max(self.V) / self.boundary_area - 1.0)

    def vprime_discrepancy(self) -> float:
        """Largest relative gap between the two V' estimates over regular interior heights."""
        ok = self.regular.copy()
        ok[1:] &= self.regular[:-1]
        ok[:-1] &= self.regular[1:]
        ok &= np.isfinite(self.Vprime_fd) & np.isfinite(self.Vprime_var) & (self.Vprime_var > 0)
        if not np.any(ok):
            return float("nan")
        return float(np.max(np.abs(self.Vprime_fd[ok] - self.Vprime_var[ok]) / self.Vprime_var[ok]))


def first_variation(levelset: LevelSet) -> float:
    """V'(h) = integral of Hc / |Df| over Sigma_h."""
    if levelset.empty:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        return surface_integral(levelset, levelset.hcirc / levelset.slope)


def area_profile(field, heights=None, K: int = 200) -> AreaProfile:
    """V(h) on a height ladder with V' by centred difference and by first variation.

    Non-regular heights are flagged; their V' entries (and the centred
    differences that would use them) are NaN.
    """
    check_graph(field)
    heights = default_ladder(field, K) if heights is None else check_heights(heights)
    eps = regularity_threshold(field)
    sets = ordered_map(lambda h: extract_level_set(field, h, eps_reg=eps), heights)
    V = np.array([s.area for s in sets])
    reg = np.array([s.regular for s in sets])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        var = np.array([first_variation(s) if r else np.nan for s, r in zip(sets, reg)])
    fd = np.full(len(heights), np.nan)
    for i in range(1, len(heights) - 1):
        if reg[i - 1] and reg[i + 1]:
            fd[i] = (V[i + 1] - V[i - 1]) / (heights[i + 1] - heights[i - 1])
    bnd = getattr(field, "boundary_area", None)
    return AreaProfile(np.asarray(heights, dtype=float), V, fd, var, reg, None if bnd is None else float(bnd))
