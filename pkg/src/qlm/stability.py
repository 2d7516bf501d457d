"""Threshold height h_o, lower bounds on V'(h), the comparison ODE, and the
height and volume estimates that follow from them.

Notation: m is the boundary Brown-York mass, omega the area of the unit
(n-1)-sphere, c_n = 2 (n-1) omega, q = (n-1)/(n-2) and

    b(V) = (1/(2m)) (V/omega)^{1/q} - 1.

The threshold is T = 2 (1+xi)^q omega (2m)^q and h_o = sup{h : V(h) <= T}.
The comparison ODE is Y' = kappa m b(Y)^{3/2} with Y(h_o) = T/2, so that
b(Y(h_o)) = xi.  The default kappa = 2 c_n / (3 sqrt 3) is the constant in
the optimised lower bound V' > kappa m b(V)^{3/2}, which is what lets the
comparison principle conclude Y <= V.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from ._validation import PreconditionError, ball_volume, check_graph, check_positive, lam_constant, sphere_area
from .level_sets import area_profile, extract_level_set, first_variation, regularity_threshold, surface_integral
from .mass import boundary_mass

__all__ = [
    "threshold",
    "initial_value",
    "ode_constant",
    "compute_h_o",
    "vprime_lower_bound_check",
    "vprime_optimized_bound_check",
    "rk4",
    "ode_comparison",
    "separable_height",
    "height_estimate_check",
    "volume_estimate_check",
    "isoperimetric_constant",
    "StabilityReport",
    "stability_report",
    "StabilitySweep",
    "stability_sweep",
    "bracket",
    "k_antiderivative",
    "height_form",
    "volume_form",
]


def _q(n):
    return (n - 1) / (n - 2)


def _check_mass_xi(n, m, xi):
    if n < 3:
        raise PreconditionError("the stability estimates need n >= 3")
    if not m > 0:
        raise PreconditionError(f"m_BY must be positive, got {m!r}")
    if not xi >= 1:
        raise PreconditionError(f"xi must be >= 1, got {xi!r}")


def threshold(n, m, xi=1.0) -> float:
    """T = 2 (1+xi)^q omega (2m)^q."""
    q = _q(n)
    return 2.0 * (1.0 + xi) ** q * sphere_area(n) * (2.0 * m) ** q


def initial_value(n, m, xi=1.0) -> float:
    """Y(h_o) = (1+xi)^q omega (2m)^q."""
    q = _q(n)
    return (1.0 + xi) ** q * sphere_area(n) * (2.0 * m) ** q


def ode_constant(n) -> float:
    return 2.0 * lam_constant(n) / (3.0 * math.sqrt(3.0))


def bracket(n, m, V):
    """b(V) = (1/(2m)) (V/omega)^{(n-2)/(n-1)} - 1."""
    return (np.asarray(V, dtype=float) / sphere_area(n)) ** (1.0 / _q(n)) / (2.0 * m) - 1.0


# --------------------------------------------------------------------------- h_o

def compute_h_o(field, xi: float = 1.0, m_BY: float | None = None, K: int = 200, bisect_steps: int = 60) -> float:
    """sup{h : V(h) <= T(xi, m_BY)} clipped to [min f, max f]; min f if the set is empty.

    Radial graphs invert V(h) = omega r(h)^{n-1} exactly.  Gridded graphs scan
    a K-slice ladder and bisect between the last slice under the threshold
    and its successor.
    """
    check_graph(field)
    n = field.n
    m = boundary_mass(field) if m_BY is None else float(m_BY)
    _check_mass_xi(n, m, xi)
    T = threshold(n, m, xi)
    lo, hi = field.value_range()
    from .radial import RadialGraph

    if isinstance(field, RadialGraph) and field.increasing:
        rT = (T / sphere_area(n)) ** (1.0 / (n - 1))
        if rT <= field.r_inner:
            return lo
        if rT >= field.R:
            return hi
        return float(field.f(np.asarray(rT)))

    eps = regularity_threshold(field)
    area = lambda h: extract_level_set(field, h, eps_reg=eps).area
    ladder = lo + (np.arange(0, K + 1) / K) * (hi - lo)
    V = np.array([area(h) for h in ladder[1:]])
    below = np.nonzero(V <= T)[0]
    if below.size == 0:
        # V(min f) is 0 by convention only for horizon-free graphs
        a, b = ladder[0], ladder[1]
        if getattr(field, "horizon_areas", lambda: [])() and np.sum(field.horizon_areas()) > T:
            return lo
    else:
        k = int(below[-1])
        if k == K - 1:
            return hi
        a, b = ladder[k + 1], ladder[k + 2]
    if area(b) <= T:
        return float(b)
    for _ in range(bisect_steps):
        mid = 0.5 * (a + b)
        if area(mid) <= T:
            a = mid
        else:
            b = mid
        if b - a <= 1e-13 * max(1.0, abs(a)):
            break
    return float(a)


# --------------------------------------------------------------------------- V' bounds

@dataclass
class VprimeBound:
    h: float
    alpha: float
    vprime: float
    bound: float
    margin: float

    def to_dict(self):
        return asdict(self)


def _regular_set(field, h):
    ls = extract_level_set(field, h)
    if ls.empty or not ls.regular:
        raise PreconditionError(f"height {h:.6g} is not a regular value with a non-empty level set")
    return ls


def vprime_lower_bound_check(field, h, alpha, m_BY: float | None = None) -> VprimeBound:
    """V'(h) against alpha^{-1} [int Hc - (1 + alpha^{-2}) c_n m_BY]."""
    check_graph(field)
    alpha = check_positive(alpha, "alpha")
    m = boundary_mass(field) if m_BY is None else float(m_BY)
    ls = _regular_set(field, h)
    vp = first_variation(ls)
    total = surface_integral(ls, ls.hcirc)
    bound = (total - (1.0 + alpha**-2) * lam_constant(field.n) * m) / alpha
    return VprimeBound(float(h), alpha, vp, bound, vp - bound)


@dataclass
class OptimizedBound:
    h: float
    vprime: float
    bound: float
    margin: float
    alpha_star: float
    value_at_alpha_star: float
    sweep_max: float
    sweep_argmax: float
    sweep_gap: float

    def to_dict(self):
        return asdict(self)


def vprime_optimized_bound_check(field, h, m_BY: float | None = None, sweep=(1e-3, 1e3, 2001)) -> OptimizedBound:
    """V'(h) against kappa m b(V)^{3/2}, plus a log-spaced alpha sweep of the
    unoptimised bound to confirm alpha* = sqrt(3 / b) is its maximiser.

    ``sweep_gap`` is (sweep max - value at alpha*) / |sweep max|; it is
    zero up to sweep resolution when the Minkowski inequality is an
    equality on Sigma_h (round spheres) and may be positive otherwise.
    """
    check_graph(field)
    n = field.n
    m = boundary_mass(field) if m_BY is None else float(m_BY)
    if not m > 0:
        raise PreconditionError("m_BY must be positive")
    ls = _regular_set(field, h)
    V = ls.area
    b = float(bracket(n, m, V))
    if not b > 0:
        raise PreconditionError(f"V(h) = {V:.6g} does not exceed omega (2 m_BY)^q (bracket {b:.3g})")
    vp = first_variation(ls)
    bound = ode_constant(n) * m * b**1.5
    total = surface_integral(ls, ls.hcirc)
    cn = lam_constant(n)
    phi = lambda a: (total - (1.0 + a**-2.0) * cn * m) / a
    a_star = math.sqrt(3.0 / b)
    alphas = np.geomspace(*sweep[:2], int(sweep[2]))
    vals = phi(alphas)
    j = int(np.argmax(vals))
    at_star = float(phi(a_star))
    smax = float(vals[j])
    gap = (smax - at_star) / abs(smax) if smax != 0 else 0.0
    return OptimizedBound(float(h), vp, bound, vp - bound, a_star, at_star, smax, float(alphas[j]), gap)


# --------------------------------------------------------------------------- ODE

def rk4(fun, y0, t0, t1, steps=1000):
    """Classical fixed-step Runge-Kutta; returns (t, y) arrays of length steps + 1."""
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    t = np.linspace(t0, t1, steps + 1)
    dt = (t1 - t0) / steps
    y = np.empty(steps + 1)
    y[0] = y0
    for i in range(steps):
        ti, yi = t[i], y[i]
        k1 = fun(ti, yi)
        k2 = fun(ti + dt / 2, yi + dt / 2 * k1)
        k3 = fun(ti + dt / 2, yi + dt / 2 * k2)
        k4 = fun(ti + dt, yi + dt * k3)
        y[i + 1] = yi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return t, y


@dataclass
class OdeComparison:
    h_o: float
    xi: float
    m_BY: float
    kappa: float
    Y0: float
    threshold: float
    h: list
    Y: list
    V: list
    p: list
    violations: int
    max_excess: float
    ok: bool

    def to_dict(self):
        return asdict(self)


def ode_comparison(field, m_BY: float | None = None, xi: float = 1.0, h_o: float | None = None,
                   steps: int = 1000, tol: float = 1e-6, kappa: float | None = None, K: int = 200) -> OdeComparison:
    """Integrate Y' = kappa m b(Y)^{3/2} from Y(h_o) = T/2 to max f and compare with V.

    ``tol`` is relative to V.  A negative bracket at h_o means the threshold
    and the initial value are inconsistent, which raises.
    """
    check_graph(field)
    n = field.n
    m = boundary_mass(field) if m_BY is None else float(m_BY)
    _check_mass_xi(n, m, xi)
    if h_o is None:
        h_o = compute_h_o(field, xi, m, K=K)
    lo, hi = field.value_range()
    kappa = ode_constant(n) if kappa is None else float(kappa)
    Y0 = initial_value(n, m, xi)
    if bracket(n, m, Y0) < 0:
        raise PreconditionError("negative bracket at h_o: threshold and initial value disagree")
    T = threshold(n, m, xi)
    if not h_o < hi:
        return OdeComparison(h_o, xi, m, kappa, Y0, T, [h_o], [Y0], [], [float(bracket(n, m, Y0))], 0, 0.0, True)

    def rhs(_, y):
        return kappa * m * max(float(bracket(n, m, y)), 0.0) ** 1.5

    t, Y = rk4(rhs, Y0, h_o, hi, steps)
    ladder = lo + (np.arange(1, K + 1) / K) * (hi - lo)
    ladder = ladder[ladder >= h_o]
    prof = area_profile(field, ladder)
    Yl = np.interp(prof.heights, t, Y)
    excess = (Yl - prof.V) / np.maximum(prof.V, 1e-300)
    bad = excess > tol
    return OdeComparison(float(h_o), xi, m, kappa, Y0, T, t.tolist(), Y.tolist(), prof.V.tolist(),
                         bracket(n, m, Y).tolist(), int(np.count_nonzero(bad)),
                         float(np.max(excess)) if excess.size else 0.0, not bool(np.any(bad)))


def separable_height(n, m, p_end, xi=1.0, kappa: float | None = None) -> float:
    """h - h_o from the separated form of the ODE, integrated in p from xi to p_end.

    h - h_o = (2/kappa) q omega (2m)^{1/(n-2)} int_xi^p s^{-3/2} (s+1)^{1/(n-2)} ds
    """
    from scipy.integrate import quad

    kappa = ode_constant(n) if kappa is None else float(kappa)
    pref = (2.0 / kappa) * _q(n) * sphere_area(n) * (2.0 * m) ** (1.0 / (n - 2))
    val, _ = quad(lambda s: s**-1.5 * (s + 1.0) ** (1.0 / (n - 2)), xi, p_end, limit=200)
    return pref * val


def k_antiderivative(p):
    """k(p) = -2 sqrt(p+1)/sqrt(p) + log(1/2 + p + sqrt(p^2 + p)); k' = p^{-3/2} (p+1)^{1/2}."""
    p = np.asarray(p, dtype=float)
    return -2.0 * np.sqrt(p + 1) / np.sqrt(p) + np.log(0.5 + p + np.sqrt(p * p + p))


# --------------------------------------------------------------------------- estimates

@dataclass
class HeightEstimate:
    max_f: float
    h_o: float
    gap: float
    bound_form: float
    ratio: float

    def to_dict(self):
        return asdict(self)


def height_form(n, m, boundary_area) -> float:
    """|dU|^{1/4} m^{1/2} for n = 3; m^{1/(n-2)} (|log m| + |dU|) otherwise."""
    if n == 3:
        return boundary_area**0.25 * math.sqrt(m)
    return m ** (1.0 / (n - 2)) * (abs(math.log(m)) + boundary_area)


def height_estimate_check(field, m_BY: float | None = None, xi: float = 1.0, h_o: float | None = None) -> HeightEstimate:
    """gap = max f - h_o and its ratio to the constant-free bound form."""
    check_graph(field)
    n = field.n
    m = boundary_mass(field) if m_BY is None else float(m_BY)
    _check_mass_xi(n, m, xi)
    if h_o is None:
        h_o = compute_h_o(field, xi, m)
    _, hi = field.value_range()
    gap = hi - h_o
    if gap < 0:
        raise AssertionError("h_o exceeds max f")
    form = height_form(n, m, float(field.boundary_area))
    return HeightEstimate(hi, float(h_o), float(gap), form, gap / form)


def isoperimetric_constant(n) -> float:
    """n^{n/(n-1)} vol(B_1)^{1/(n-1)}, so that vol(Omega) <= |dOmega|^{n/(n-1)} / constant."""
    return n ** (n / (n - 1)) * ball_volume(n) ** (1.0 / (n - 1))


@dataclass
class VolumeEstimate:
    vol_graph: float
    vol_U: float
    excess: float
    V_minus: float
    V_plus: float
    bound_minus: float
    bound_plus: float
    bound_total: float
    dominates: bool
    lower_ok: bool
    bound_form: float
    ratio: float

    def to_dict(self):
        return asdict(self)


def volume_form(n, m, h_o, min_f, boundary_area) -> float:
    """Constant-free right-hand side of the volume estimate (beyond vol U)."""
    a = (2 * m) ** (n / (n - 2)) + (h_o - min_f) * (2 * m) ** ((n - 1) / (n - 2))
    if n == 3:
        return a + boundary_area**1.25 * math.sqrt(m)
    return a + m ** (1.0 / (n - 2)) * (abs(math.log(m)) + boundary_area)


def _split_graph_volume(field, h_o):
    return field.graph_volume(("sublevel", h_o)), field.graph_volume(("superlevel", h_o))


def volume_estimate_check(field, m_BY: float | None = None, xi: float = 1.0, h_o: float | None = None) -> VolumeEstimate:
    """vol(graph) split at h_o and compared with explicit-constant bounds.

    Below h_o: V_f^- <= T^{n/(n-1)} / C_iso + T (h_o - min f), from
    sqrt(1+s^2) <= 1 + s, the coarea formula and the isoperimetric
    inequality with V <= T.  Above h_o: V_f^+ <= vol(U) + |dU| (max f - h_o).
    """
    check_graph(field)
    n = field.n
    vol_g = float(field.graph_volume())
    vol_U = float(field.domain_volume)
    lower_ok = vol_U - vol_g <= 1e-9 * vol_U + sum(field.horizon_volumes())
    m = boundary_mass(field) if m_BY is None else float(m_BY)
    lo, hi = field.value_range()
    if not m > 0:
        return VolumeEstimate(vol_g, vol_U, vol_g - vol_U, float("nan"), float("nan"), float("nan"), float("nan"),
                              float("nan"), True, lower_ok, 0.0, 0.0 if vol_g == vol_U else float("inf"))
    _check_mass_xi(n, m, xi)
    if h_o is None:
        h_o = compute_h_o(field, xi, m)
    vm, vp = _split_graph_volume(field, h_o)
    T = threshold(n, m, xi)
    bm = T ** (n / (n - 1)) / isoperimetric_constant(n) + T * (h_o - lo)
    bp = vol_U + float(field.boundary_area) * (hi - h_o)
    form = volume_form(n, m, h_o, lo, float(field.boundary_area))
    return VolumeEstimate(vol_g, vol_U, vol_g - vol_U, float(vm), float(vp), float(bm), float(bp), float(bm + bp),
                          bool(vm <= bm and vp <= bp), bool(lower_ok), form, (vol_g - vol_U) / form)


# --------------------------------------------------------------------------- report

@dataclass
class StabilityReport:
    xi: float
    m_BY: float
    threshold: float
    h_o: float
    ode: dict | None
    height: dict | None
    volume: dict | None
    notes: list = dc_field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @property
    def ok(self) -> bool:
        if self.ode is not None and not self.ode["ok"]:
            return False
        if self.volume is not None and not self.volume["lower_ok"]:
            return False
        return True


def stability_report(field, xi: float = 1.0, K: int = 200, steps: int = 1000, tol: float = 1e-6) -> StabilityReport:
    check_graph(field)
    m = boundary_mass(field)
    n = field.n
    if not m > 0 or n < 3:
        vol = volume_estimate_check(field, m_BY=m)
        why = "m_BY is not positive" if not m > 0 else "n < 3"
        return StabilityReport(xi, m, float("nan"), float("nan"), None, None, vol.to_dict(),
                               [f"{why}: h_o and the comparison ODE are undefined"])
    h_o = compute_h_o(field, xi, m, K=K)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ode = ode_comparison(field, m, xi, h_o=h_o, steps=steps, tol=tol, K=K)
    h = height_estimate_check(field, m, xi, h_o=h_o)
    v = volume_estimate_check(field, m, xi, h_o=h_o)
    ode_d = ode.to_dict()
    # keep the JSON compact: the full trace goes to CSV when requested
    for key in ("h", "Y", "V", "p"):
        ode_d[key] = ode_d[key][:: max(1, len(ode_d[key]) // 50)]
    return StabilityReport(xi, m, threshold(n, m, xi), h_o, ode_d, h.to_dict(), v.to_dict())


# --------------------------------------------------------------------------- sweeps

@dataclass
class StabilitySweep:
    param: str
    ladder: list
    m_BY: list
    h_o: list
    gap: list
    ratio: list
    vol_excess: list
    Y_violations: list

    def to_dict(self):
        return asdict(self)

    @property
    def ratio_spread(self) -> float:
        r = [x for x in self.ratio if x > 0 and math.isfinite(x)]
        return max(r) / min(r) if r else float("nan")

    def to_csv(self, path, fmt="{:.12g}"):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["param", "m_BY", "h_o", "gap", "ratio", "vol_excess", "Y_violations"])
            for p, m, h, g, r, v, y in zip(self.ladder, self.m_BY, self.h_o, self.gap, self.ratio,
                                           self.vol_excess, self.Y_violations):
                w.writerow([fmt.format(p), fmt.format(m), fmt.format(h), fmt.format(g), fmt.format(r),
                            fmt.format(v), int(y)])


def stability_sweep(base, ladder, xi: float = 1.0, mode: str = "analytic", resolution: int = 64,
                    tol: float = 1e-6, K: int = 200) -> StabilitySweep:
    """h_o, height gap, volume excess and ODE violations along a parameter ladder."""
    from ._parallel import ordered_map
    from .families import instantiate
    from .flat import _ladder_specs

    name, vals, specs = _ladder_specs(base, ladder)

    def one(spec):
        g = instantiate(spec, mode=mode, resolution=resolution)
        m = boundary_mass(g)
        vol_ex = float(g.graph_volume()) - float(g.domain_volume)
        if not m > 0 or g.n < 3:
            return m, float("nan"), float("nan"), float("nan"), vol_ex, 0
        h_o = compute_h_o(g, xi, m, K=K)
        he = height_estimate_check(g, m, xi, h_o=h_o)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            ode = ode_comparison(g, m, xi, h_o=h_o, tol=tol, K=K)
        return m, h_o, he.gap, he.ratio, vol_ex, ode.violations

    rows = ordered_map(one, specs)
    cols = list(zip(*rows))
    return StabilitySweep(name, vals, *[list(c) for c in cols])
