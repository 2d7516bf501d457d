"""Named invariant checks run by ``qlm verify``.

Each check takes the run configuration and a tolerance and returns a
:class:`CheckResult`; ``passed`` compares ``value`` against ``tolerance``
in the direction documented by each check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ._parallel import ordered_map
from .families import KINDS, FamilySpec, instantiate
from .flat import convergence_run, decompose
from .geometry import check_admissibility
from .level_sets import area_profile, default_ladder, extract_level_set, regularity_threshold
from .mass import (MeanConvexityWarning, adm_limit_check, boundary_mass, lam_identity_check, minkowski_check,
                   monotonicity_and_bulk_identity, penrose_check)
from .stability import rk4, stability_sweep

SWEEP_M = (0.2, 0.1, 0.05, 0.025, 0.0125)
_INSTANCE_R = {"cap": 0.8, "gravity_well": 1.0, "saddle": 1.0, "paraboloid": 1.0}


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: dict

    def to_dict(self):
        return asdict(self)


def _instances(cfg, kinds=KINDS, n=3):
    """One instance per shipped family, analytic where possible."""
    out = []
    for kind in kinds:
        spec = FamilySpec(kind, n, {}, _INSTANCE_R.get(kind, 4.0))
        mode = cfg.mode if spec.radial else "grid"
        res = cfg.resolution if mode == "grid" and spec.radial else min(cfg.resolution, 32)
        out.append((spec, instantiate(spec, mode=mode, resolution=res)))
    return out


def _sweep_base(cfg, n=3):
    return FamilySpec("schwarzschild", n, {"m": SWEEP_M[0]}, cfg.sweep_R)


def _sweep_ladder():
    return {"param": "m", "values": list(SWEEP_M)}


# --------------------------------------------------------------------------- checks

def brown_york_closed_form(cfg, tol):
    """max relative error of m_BY(dU) against r (1 - sqrt(1 - 2/r)); pass if <= tol."""
    radii = [4.0, 8.0, 16.0, 32.0]

    def one(R):
        g = instantiate(FamilySpec("schwarzschild", 3, {"m": 1.0}, R), mode=cfg.mode, resolution=cfg.resolution)
        exact = R * (1 - math.sqrt(1 - 2 / R))
        return abs(boundary_mass(g) - exact) / exact

    errs = ordered_map(one, radii)
    v = max(errs)
    return v <= tol, v, {"radii": radii, "relative_errors": errs}


def adm_limit(cfg, tol):
    """|m_BY(32) - 1| <= tol and monotone decrease over r = 4, 8, 16, 32."""
    a = adm_limit_check(FamilySpec("schwarzschild", 3, {"m": 1.0}, 4.0), [4.0, 8.0, 16.0, 32.0])
    return a.monotone_decreasing and a.final_error <= tol, a.final_error, a.to_dict()


def lam_identity(cfg, tol):
    """max over families and slices of discrepancy / scale; pass if <= tol."""
    worst, per = 0.0, {}
    for spec, g in _instances(cfg):
        eps = regularity_threshold(g)
        v = 0.0
        for h in default_ladder(g, 32):
            d, s = lam_identity_check(extract_level_set(g, h, eps_reg=eps))
            if s > 0:
                v = max(v, d / s)
        per[spec.kind] = v
        worst = max(worst, v)
    return worst <= tol, worst, {"per_family": per}


def bulk_identity(cfg, tol):
    """Relative residual of L(h2) - L(h1) against the bulk integral: Schwarzschild (scalar flat)
    must meet tol, the curved cap 2 tol.  The reported value is the worse of the two, (cap halved)."""
    sch = instantiate(FamilySpec("schwarzschild", 3, {"m": 1.0}, 8.0), mode=cfg.mode, resolution=cfg.resolution)
    lo, hi = sch.value_range()
    a = monotonicity_and_bulk_identity(sch, lo + 0.3 * (hi - lo), sch.boundary_level_value())
    cap = instantiate(FamilySpec("cap", 3, {"rho": 1.0}, 0.8), mode=cfg.mode, resolution=cfg.resolution)
    lo, hi = cap.value_range()
    b = monotonicity_and_bulk_identity(cap, lo + 0.02 * (hi - lo), cap.boundary_level_value())
    ok = a.relative_residual <= tol and b.bulk_relative_residual <= 2 * tol
    v = max(a.relative_residual, b.bulk_relative_residual / 2)
    return ok, v, {"schwarzschild": a.to_dict(), "cap": b.to_dict()}


def minkowski(cfg, tol):
    """Smallest relative deficit on mean-convex slices of admissible families (pass if >= -tol),
    and round-sphere deficits for n = 3, 4 (pass if |.| <= tol)."""
    worst = math.inf
    for spec, g in _instances(cfg):
        if not spec.expect_admissible:
            continue
        eps = regularity_threshold(g)
        for h in default_ladder(g, 32):
            ls = extract_level_set(g, h, eps_reg=eps)
            if ls.regular and ls.mean_convex:
                worst = min(worst, minkowski_check(ls).relative_deficit)
    round_dev = 0.0
    for n in (3, 4):
        g = instantiate(FamilySpec("schwarzschild", n, {"m": 1.0}, 8.0))
        for h in default_ladder(g, 16):
            ls = extract_level_set(g, h)
            if ls.regular:
                round_dev = max(round_dev, abs(minkowski_check(ls).relative_deficit))
    worst = 0.0 if worst == math.inf else worst
    return worst >= -tol and round_dev <= tol, min(worst, -round_dev), {"min_deficit": worst, "round": round_dev}


def penrose(cfg, tol):
    """Relative error of the r = 4 margin against 2 (2 - sqrt 2) - 1 (pass if <= tol and margins > 0)."""
    margins = []
    for R in (4.0, 8.0, 16.0):
        g = instantiate(FamilySpec("schwarzschild", 3, {"m": 1.0}, R), mode=cfg.mode, resolution=cfg.resolution)
        margins.append(penrose_check(g).margin)
    exact = 4 * (1 - math.sqrt(0.5)) - 1
    err = abs(margins[0] - exact) / exact
    return all(m > 0 for m in margins) and err <= tol, err, {"margins": margins, "oracle": exact}


def area_profile_bounds(cfg, tol):
    """V non-decreasing and V <= |dU| (1 + tol) on admissible families."""
    worst, per = 0.0, {}
    for spec, g in _instances(cfg):
        if not spec.expect_admissible:
            continue
        p = area_profile(g, K=cfg.K)
        v = max(p.monotonicity_violation(), p.boundary_excess())
        per[spec.kind] = v
        worst = max(worst, v)
    return worst <= tol, worst, {"per_family": per}


def ode_comparison_sweep(cfg, tol):
    """Y <= V (1 + tol) on the Schwarzschild sweep and RK4 error on Y' = Y (both <= tol)."""
    s = stability_sweep(_sweep_base(cfg), _sweep_ladder(), xi=cfg.xi, tol=tol, K=cfg.K)
    _, y = rk4(lambda t, y: y, 1.0, 0.0, 1.0, 1000)
    err = abs(y[-1] - math.e)
    viol = int(sum(s.Y_violations))
    return viol == 0 and err <= max(tol, 1e-9), err, {"violations": s.Y_violations, "rk4_error": err}


def height_ratio(cfg, tol):
    """max / min of gap / (|dU|^{1/4} sqrt m) over the sweep; pass if <= tol."""
    s = stability_sweep(_sweep_base(cfg), _sweep_ladder(), xi=cfg.xi, K=cfg.K)
    v = s.ratio_spread
    return v <= tol and all(g >= 0 for g in s.gap), v, s.to_dict()


def volume_excess(cfg, tol):
    """vol(graph) >= vol(U), the excess decreases along the sweep, and the constant family has none."""
    s = stability_sweep(_sweep_base(cfg), _sweep_ladder(), xi=cfg.xi, K=cfg.K)
    ex = s.vol_excess
    dec = all(b < a for a, b in zip(ex[:-1], ex[1:]))
    g = instantiate(FamilySpec("constant", 3, {"c": 0.3}, 1.0))
    const = abs(float(g.graph_volume()) - float(g.domain_volume)) / float(g.domain_volume)
    return dec and min(ex) >= 0 and const <= tol, const, {"vol_excess": ex, "constant_relative_excess": const}


def flat_distance(cfg, tol):
    """d_F decreases over the last half of the sweep; translation changes d_F by at most tol (relative);
    the gravity-well ratio d_F / sup distance decreases."""
    run = convergence_run(_sweep_base(cfg), _sweep_ladder(), xi=cfg.xi)
    k0 = run.slope_window[0]
    tail = run.dF_bound[k0:]
    dec = all(b < a for a, b in zip(tail[:-1], tail[1:]))
    g = instantiate(FamilySpec("schwarzschild", 3, {"m": 0.1}, 2.0))
    d0 = decompose(g, 0.3).dF_bound
    d1 = decompose(g.shifted(1.25), 1.55).dF_bound
    shift_err = abs(d0 - d1) / d0
    well = convergence_run(FamilySpec("gravity_well", 3, {"w": 0.4, "d": 2.5}, 1.0),
                           [{"w": w, "d": 1.0 / w} for w in (0.4, 0.2, 0.1, 0.05)])
    r = well.dF_over_sup
    wdec = all(b < a for a, b in zip(r[:-1], r[1:])) and well.sup_distance[-1] > well.sup_distance[0]
    ok = dec and wdec and shift_err <= tol
    return ok, shift_err, {"slope": run.slope, "dF_bound": run.dF_bound, "well_dF_over_sup": r,
                           "well_sup": well.sup_distance, "translation_error": shift_err}


def admissibility(cfg, tol):
    """Every shipped family's verdict matches its expectation; inadmissible radial families carry
    a negative-R certificate.  ``tol`` is the relative R tolerance."""
    mism, detail = [], {}
    for spec, g in _instances(cfg):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MeanConvexityWarning)
            rep = check_admissibility(g, r_tol=max(tol, 1e-15))
        detail[spec.kind] = rep.verdict
        if (rep.verdict == "pass") != spec.expect_admissible:
            mism.append(spec.kind)
        if spec.kind in ("gravity_well", "saddle") and rep.negative_R_certificate is None:
            mism.append(spec.kind + ":certificate")
    return not mism, float(len(mism)), {"verdicts": detail, "mismatches": mism}


INVARIANTS = {
    "brown_york_closed_form": (brown_york_closed_form, 0.005),
    "adm_limit": (adm_limit, 0.02),
    "lam_identity": (lam_identity, 1e-12),
    "bulk_identity": (bulk_identity, 0.01),
    "minkowski": (minkowski, 0.005),
    "penrose": (penrose, 0.01),
    "area_profile": (area_profile_bounds, 0.01),
    "ode_comparison": (ode_comparison_sweep, 1e-6),
    "height_ratio": (height_ratio, 3.0),
    "volume_excess": (volume_excess, 1e-9),
    "flat_distance": (flat_distance, 1e-9),
    "admissibility": (admissibility, 1e-6),
}


def run_invariant(name, cfg, tol=None) -> CheckResult:
    fn, default = INVARIANTS[name]
    tol = default if tol is None else float(tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MeanConvexityWarning)
        ok, value, detail = fn(cfg, tol)
    return CheckResult(name, bool(ok), float(value), tol, detail)
