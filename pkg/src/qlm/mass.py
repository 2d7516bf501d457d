"""Brown-York mass, the Lam functional, and the inequalities tying them together.

For a level set Sigma_h of f with slope s = |Df| and W = sqrt(1 + s^2):

* m_BY = 1/((n-1) omega) * int (Hc - H),  H = Hc / W;
* L    = 1/c_n * int s^2 / W^2 * Hc,      c_n = 2 (n-1) omega;

both vanish on flat slices and equal m on every Schwarzschild-Tangherlini
sphere (L exactly, m_BY in the limit r -> infinity).  The vector field
X = (Lap f Df - Hess f Df) / W^2 satisfies div X = R with outward flux
s^2 Hc / W^2 through each level set, so L(h2) - L(h1) equals the Euclidean
integral of R between the two level sets divided by c_n.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from ._parallel import ordered_map
from ._validation import PreconditionError, check_graph, check_heights, lam_constant, sphere_area
from .level_sets import LevelSet, default_ladder, extract_level_set, regularity_threshold

__all__ = [
    "MeanConvexityWarning",
    "brown_york_mass",
    "lam_functional",
    "lam_identity_check",
    "monotonicity_and_bulk_identity",
    "minkowski_check",
    "penrose_check",
    "adm_limit_check",
    "boundary_mass",
    "MassReport",
    "mass_report",
]


class MeanConvexityWarning(UserWarning):
    """A level set has facets with non-positive slice mean curvature."""


def _weights(ls: LevelSet):
    """s^2 / W^2 and 1 - 1/W, evaluated without cancellation."""
    s2 = ls.slope**2
    W = ls.W
    return s2 / (W * W), s2 / (W * (W + 1.0))


def brown_york_mass(levelset: LevelSet) -> float:
    """(1/((n-1) omega)) * int (Hc - H) over the level set (0 for an empty set)."""
    ls = levelset
    if ls.empty:
        return 0.0
    if not ls.mean_convex:
        warnings.warn(f"level set at h={ls.height:.6g} is not strictly mean convex", MeanConvexityWarning,
                      stacklevel=2)
    _, one_minus = _weights(ls)
    integrand = ls.hcirc * one_minus
    return float(np.sum(integrand * ls.areas) / ((ls.n - 1) * sphere_area(ls.n)))


def lam_functional(levelset: LevelSet) -> float:
    """(1/c_n) * int s^2/(1+s^2) Hc; facets with Hc <= 0 are excluded with a warning."""
    ls = levelset
    if ls.empty:
        return 0.0
    w, _ = _weights(ls)
    hc = ls.hcirc
    keep = hc > 0
    if not np.all(keep):
        warnings.warn(f"{np.count_nonzero(~keep)} facets with Hc <= 0 excluded at h={ls.height:.6g}",
                      MeanConvexityWarning, stacklevel=2)
    return float(np.sum((w * hc * ls.areas)[keep]) / lam_constant(ls.n))


def lam_identity_check(levelset: LevelSet):
    """Largest facet gap between s^2/(1+s^2) Hc and Hc (1 - H^2/Hc^2).

    Returns ``(discrepancy, scale)`` with ``scale = max |Hc|``; the identity is
    algebraic so the discrepancy is a few ulps of the scale.
    """
    ls = levelset
    if ls.empty:
        return 0.0, 0.0
    hc, H = ls.hcirc, ls.H
    s2 = ls.slope**2
    lhs = s2 / (1.0 + s2) * hc
    ok = hc != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = np.where(ok, hc * (1.0 - (H * H) / (hc * hc)), 0.0)
    scale = float(np.max(np.abs(hc))) if hc.size else 0.0
    return float(np.max(np.abs(lhs - rhs))), scale


@dataclass
class BulkIdentity:
    h1: float
    h2: float
    L1: float
    L2: float
    delta_L: float
    bulk: float
    residual: float
    relative_residual: float
    bulk_relative_residual: float
    monotone: bool | None

    def to_dict(self):
        return asdict(self)


def monotonicity_and_bulk_identity(field, h1, h2, tol: float = 0.01) -> BulkIdentity:
    """Compare L(h2) - L(h1) with (1/c_n) * int_{h1 < f < h2} R dV_delta.

    ``relative_residual`` divides by max(|L(h1)|, |L(h2)|);
    ``bulk_relative_residual`` divides by |bulk| (NaN when the bulk is 0).
    ``monotone`` is checked (L(h2) >= L(h1) - tol * scale) only when the
    sampled R is non-negative.
    """
    check_graph(field)
    h1, h2 = float(h1), float(h2)
    if h1 > h2:
        raise PreconditionError("need h1 <= h2")
    eps = regularity_threshold(field)
    s1 = extract_level_set(field, h1, eps_reg=eps)
    s2 = extract_level_set(field, h2, eps_reg=eps)
    for s in (s1, s2):
        if not s.empty and not s.regular:
            raise PreconditionError(f"height {s.height:.6g} is not a regular value")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MeanConvexityWarning)
        L1, L2 = lam_functional(s1), lam_functional(s2)
    bulk = float(field.bulk_curvature_integral(h1, h2)) / lam_constant(field.n)
    dL = L2 - L1
    res = abs(dL - bulk)
    scale = max(abs(L1), abs(L2))
    rel = res / scale if scale > 0 else (0.0 if res == 0 else float("inf"))
    brel = res / abs(bulk) if bulk != 0 else float("nan")
    from .geometry import nonnegative_scalar_curvature

    mono = None
    if nonnegative_scalar_curvature(field):
        mono = bool(dL >= -tol * max(scale, 1e-300))
    return BulkIdentity(h1, h2, L1, L2, dL, bulk, res, rel, brel, mono)


@dataclass
class MinkowskiResult:
    lhs: float
    rhs: float
    deficit: float
    relative_deficit: float

    def to_dict(self):
        return asdict(self)


def minkowski_check(levelset: LevelSet) -> MinkowskiResult:
    """(1/((n-1) omega)) int Hc  versus  (|Sigma|/omega)^((n-2)/(n-1))."""
    ls = levelset
    n = ls.n
    om = sphere_area(n)
    if ls.empty:
        return MinkowskiResult(0.0, 0.0, 0.0, 0.0)
    lhs = float(np.sum(ls.hcirc * ls.areas) / ((n - 1) * om))
    rhs = float((ls.area / om) ** ((n - 2) / (n - 1)))
    d = lhs - rhs
    return MinkowskiResult(lhs, rhs, d, d / rhs if rhs > 0 else 0.0)


def boundary_mass(field) -> float:
    """m_BY of the level set through dU."""
    check_graph(field)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MeanConvexityWarning)
        return brown_york_mass(extract_level_set(field, field.boundary_level_value()))


@dataclass
class PenroseResult:
    m_BY: float
    horizon_area: float
    horizon_term: float
    margin: float

    def to_dict(self):
        return asdict(self)


def penrose_check(field) -> PenroseResult:
    """m_BY(dU) against (1/2) (|Sigma_o| / omega)^((n-2)/(n-1))."""
    check_graph(field)
    areas = field.horizon_areas()
    if not areas:
        raise PreconditionError("no horizon: the Penrose comparison needs U_o to be non-empty")
    n = field.n
    A = float(np.sum(areas))
    term = 0.5 * (A / sphere_area(n)) ** ((n - 2) / (n - 1))
    m = boundary_mass(field)
    return PenroseResult(m, A, term, m - term)


@dataclass
class AdmLimit:
    radii: list
    masses: list
    m: float
    monotone_decreasing: bool
    final_error: float

    def to_dict(self):
        return asdict(self)


def adm_limit_check(spec, radii) -> AdmLimit:
    """m_BY at the boundary of a radial family truncated at each radius."""
    from .families import instantiate

    radii = [float(r) for r in check_heights(radii)]
    masses = ordered_map(lambda R: boundary_mass(instantiate(type(spec)(spec.kind, spec.n, spec.params, R))),
                         radii)
    m = float(spec.params.get("m", 0.0))
    mono = all(b <= a + 1e-15 for a, b in zip(masses[:-1], masses[1:]))
    return AdmLimit(radii, masses, m, mono, abs(masses[-1] - m))


# --------------------------------------------------------------------------- report

@dataclass
class MassReport:
    n: int
    omega: float
    c_n: float
    boundary_height: float
    m_BY: float
    L_boundary: float
    heights: list
    m_BY_h: list
    L_h: list
    minkowski_deficit: list
    regular: list
    mean_convex: list
    identity_max: float
    identity_scale: float
    penrose: dict | None
    mass_dominates_L: bool
    L_monotone: bool | None
    warnings: list = dc_field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def rows(self):
        for i in range(len(self.heights)):
            yield self.heights[i], self.m_BY_h[i], self.L_h[i], self.minkowski_deficit[i], self.regular[i]

    def to_csv(self, path, fmt="{:.12g}"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["h", "m_BY", "L", "minkowski_deficit", "regular"])
            for h, m, L, d, r in self.rows():
                w.writerow([fmt.format(h), fmt.format(m), fmt.format(L), fmt.format(d), int(r)])


def mass_report(field, heights=None, K: int = 200, tol: float = 0.01) -> MassReport:
    """Every mass functional along a height ladder plus the boundary and horizon terms."""
    check_graph(field)
    n = field.n
    heights = default_ladder(field, K) if heights is None else check_heights(heights)
    eps = regularity_threshold(field)
    notes = []

    def one(h):
        ls = extract_level_set(field, h, eps_reg=eps)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MeanConvexityWarning)
            m = brown_york_mass(ls)
            L = lam_functional(ls)
        disc, scale = lam_identity_check(ls)
        mk = minkowski_check(ls) if ls.mean_convex else None
        return m, L, (mk.relative_deficit if mk else float("nan")), ls.regular, ls.mean_convex, disc, scale

    rows = ordered_map(one, heights)
    m_h = [r[0] for r in rows]
    L_h = [r[1] for r in rows]
    mk = [r[2] for r in rows]
    reg = [bool(r[3]) for r in rows]
    mc = [bool(r[4]) for r in rows]
    ident = max((r[5] for r in rows), default=0.0)
    iscale = max((r[6] for r in rows), default=0.0)
    hb = field.boundary_level_value()
    bls = extract_level_set(field, hb, eps_reg=eps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MeanConvexityWarning)
        mb = brown_york_mass(bls)
        Lb = lam_functional(bls)
    if not bls.empty and not bls.mean_convex:
        notes.append("boundary level set is not strictly mean convex")
    pen = None
    if field.horizon_areas():
        pen = penrose_check(field).to_dict()
    Lmax = max([abs(x) for x in L_h] + [abs(Lb)] + [0.0])
    dominates = all(m >= L - tol * max(Lmax, 1e-300) for m, L, r in zip(m_h, L_h, reg) if r)
    from .geometry import nonnegative_scalar_curvature

    L_mono = None
    if nonnegative_scalar_curvature(field):
        Lr = [L for L, r in zip(L_h, reg) if r]
        L_mono = all(b >= a - tol * max(Lmax, 1e-300) for a, b in zip(Lr[:-1], Lr[1:]))
    return MassReport(n, sphere_area(n), lam_constant(n), hb, mb, Lb, [float(h) for h in heights], m_h, L_h, mk,
                      reg, mc, ident, iscale, pen, dominates, L_mono, notes)
