"""Explicit filling of a graph by the flat slab {h_ref} x U and its masses.

With fbar the graph filled in over the horizon region U_o,

    graph[fbar] - {h_ref} x U = dB + A,

where B = B+ - B- is the region between the graph and the slab and A is
the filled horizon.  M(A) + M(B+) + M(B-) bounds the flat distance between
the graph and the slab from above.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from ._parallel import ordered_map
from ._validation import ConfigError, FillError, PreconditionError, check_graph
from .mass import boundary_mass

__all__ = [
    "FilledGraph",
    "fill_graph",
    "CurrentDecomposition",
    "decompose",
    "flat_bound",
    "flat_bound_form",
    "ConvergenceRun",
    "convergence_run",
    "loglog_slope",
]


@dataclass
class FilledGraph:
    field: object
    fill_heights: list
    oscillation: list

    def excess_integrals(self, h_ref):
        return self.field.excess_integrals(h_ref)

    @property
    def horizon_volumes(self):
        return list(self.field.horizon_volumes())


def fill_graph(field, osc_tol: float = 1e-6) -> FilledGraph:
    """Fill every horizon component at its boundary value.

    ``osc_tol`` is relative to the span of f; a component whose sampled
    boundary values spread further raises :class:`FillError`.
    """
    check_graph(field)
    from .radial import RadialGraph

    vols = field.horizon_volumes()
    if not vols:
        return FilledGraph(field, [], [])
    if isinstance(field, RadialGraph):
        return FilledGraph(field, [field.fill_value()], [0.0])
    lo, hi = field.value_range()
    span = max(hi - lo, 1e-300)
    heights, osc = [], []
    for k in range(len(vols)):
        b = field.boundary_values(k)
        spread = float(np.ptp(b)) if b.size else float("nan")
        if not spread <= osc_tol * span:
            raise FillError(f"f oscillates by {spread:.3g} on horizon component {k}", component=k)
        heights.append(field.fill_value(k))
        osc.append(spread)
    return FilledGraph(field, heights, osc)


@dataclass
class CurrentDecomposition:
    slab: str
    h_ref: float
    M_B_plus: float
    M_B_minus: float
    M_A: float
    dF_bound: float
    fill_heights: list
    orientation: dict
    shift: float = 0.0

    def to_dict(self):
        return asdict(self)


_ORIENTATION = {"graph": "upward", "slab": "upward", "A": "downward", "B+": "+1", "B-": "-1"}


def decompose(field, h_ref: float | None = None, osc_tol: float = 1e-6) -> CurrentDecomposition:
    """Masses of B+, B- and A for the slab at ``h_ref``.

    Without ``h_ref`` the slab sits at the height of dU.
    """
    fg = fill_graph(field, osc_tol)
    h = float(field.boundary_level_value() if h_ref is None else h_ref)
    if not math.isfinite(h):
        raise PreconditionError("h_ref must be finite")
    up, down = fg.excess_integrals(h)
    mA = float(sum(fg.horizon_volumes))
    n = field.n
    slab = f"R x closure(U) in R^{n + 1}, reference slab at s = {h:.12g}"
    return CurrentDecomposition(slab, h, up, down, mA, up + down + mA, fg.fill_heights, dict(_ORIENTATION))


def flat_bound_form(n, m, h_o, inf_f, vol_U, area_dU):
    """Constant-free flat-distance bound and its three terms (zero for m = 0)."""
    if m <= 0:
        return 0.0, [0.0, 0.0, 0.0]
    p = n / (n - 2)
    t1 = (h_o - inf_f) * m**p
    t2 = m**p
    if n == 3:
        t3 = vol_U * area_dU**0.25 * math.sqrt(m)
    else:
        t3 = vol_U * m ** (1.0 / (n - 2)) * (abs(math.log(m)) + area_dU)
    return t1 + t2 + t3, [t1, t2, t3]


@dataclass
class FlatBound:
    m_BY: float
    h_o: float
    dF_bound: float
    form: float
    terms: list
    ratio: float

    def to_dict(self):
        return asdict(self)


def _reference_height(field, m, xi):
    from .stability import compute_h_o

    if m > 0 and field.n >= 3:
        return compute_h_o(field, xi, m), "h_o"
    return float(field.boundary_level_value()), "boundary"


def flat_bound(field, xi: float = 1.0) -> FlatBound:
    """Decomposition bound at h_ref = h_o against the constant-free closed form."""
    check_graph(field)
    m = boundary_mass(field)
    h_o, _ = _reference_height(field, m, xi)
    dec = decompose(field, h_o)
    lo, _ = field.value_range()
    form, terms = flat_bound_form(field.n, m, h_o, lo, float(field.domain_volume), float(field.boundary_area))
    if form > 0:
        ratio = dec.dF_bound / form
    else:
        ratio = 0.0 if dec.dF_bound <= 1e-12 else float("inf")
    return FlatBound(m, h_o, dec.dF_bound, form, terms, ratio)


# --------------------------------------------------------------------------- convergence

def loglog_slope(x, y):
    """Least-squares slope of log y against log x (NaN with fewer than 2 usable points)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if np.count_nonzero(ok) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


@dataclass
class ConvergenceRun:
    family: str
    param: str
    ladder: list
    m_BY: list
    dF_bound: list
    vol_excess: list
    h_o: list
    gap: list
    sup_distance: list
    h_ref_rule: list
    case: str
    slope: float
    slope_window: list
    warnings: list = dc_field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @property
    def dF_over_sup(self):
        return [d / s if s > 0 else 0.0 for d, s in zip(self.dF_bound, self.sup_distance)]

    def summary(self):
        d = self.to_dict()
        d["dF_over_sup"] = self.dF_over_sup
        return d

    def to_csv(self, path, fmt="{:.12g}"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["param", "m_BY", "dF_bound", "vol_excess", "h_o", "gap"])
            for row in zip(self.ladder, self.m_BY, self.dF_bound, self.vol_excess, self.h_o, self.gap):
                w.writerow([fmt.format(v) for v in row])

    def dat_rows(self):
        """(log m_BY, log d_F) pairs where both are positive."""
        return [(math.log(m), math.log(d)) for m, d in zip(self.m_BY, self.dF_bound) if m > 0 and d > 0]


def _ladder_specs(base, ladder):
    """Turn a ladder description into (parameter name, values, specs)."""
    if isinstance(ladder, dict):
        if "param" not in ladder or "values" not in ladder:
            raise ConfigError("ladder dict needs 'param' and 'values'")
        name = str(ladder["param"])
        entries = [{name: v} for v in ladder["values"]]
    else:
        entries = list(ladder)
        if entries and not all(isinstance(e, dict) for e in entries):
            raise ConfigError("ladder must be a list of parameter dicts or {'param', 'values'}")
        keys = [k for k in (entries[0] if entries else {})]
        name = keys[0] if keys else ""
    if not entries:
        raise ConfigError("empty parameter ladder")
    vals = []
    specs = []
    for e in entries:
        e = dict(e)
        R = e.pop("R", base.R)
        specs.append(type(base)(base.kind, base.n, {**base.params, **e}, float(R)))
        vals.append(float(e[name]) if name in e else float(R))
    v = np.asarray(vals)
    d = np.diff(v)
    if v.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ConfigError(f"ladder in {name!r} must be strictly monotone")
    return name, vals, specs


def _case(n, m, inf_norm, height):
    """Which hypothesis of the convergence statement the run satisfies."""
    p = n / (n - 2)
    q = [abs(i) * mm**p for i, mm in zip(inf_norm, m)]
    if len(q) > 1 and all(b <= a * (1 + 1e-9) + 1e-300 for a, b in zip(q[:-1], q[1:])) and q[-1] < q[0] + 1e-300:
        return "1: |inf f| m^{n/(n-2)} decreasing"
    if height and max(height) <= 10.0 * max(min(height), 1e-300):
        return "2: bounded height"
    return "unverified"


def convergence_run(base, ladder, xi: float = 1.0, mode: str = "analytic", resolution: int = 64) -> ConvergenceRun:
    """d_F bound and volume excess along a parameter ladder, normalised so h_o = 0.

    Elements with m_BY <= 0 use the boundary height as reference.  The
    slope of log d_F against log m_BY is fitted over the last half of the
    ladder.
    """
    from .families import instantiate

    name, vals, specs = _ladder_specs(base, ladder)

    def one(spec):
        g = instantiate(spec, mode=mode, resolution=resolution)
        m = boundary_mass(g)
        h_ref, rule = _reference_height(g, m, xi)
        norm = g.shifted(-h_ref)
        dec = decompose(norm, 0.0)
        lo, hi = g.value_range()
        vol_ex = float(g.graph_volume()) - float(g.domain_volume)
        fill = fill_graph(g).fill_heights
        sup = max(abs(lo - h_ref), abs(hi - h_ref), *[abs(v - h_ref) for v in fill])
        return m, dec.dF_bound, vol_ex, h_ref, hi - h_ref, sup, rule, lo - h_ref, hi - lo

    rows = ordered_map(one, specs)
    m = [r[0] for r in rows]
    notes = []
    dm = np.diff(m)
    if len(m) > 1 and not (np.all(dm >= 0) or np.all(dm <= 0)):
        msg = "m_BY is not monotone along the ladder; the family may be misconfigured"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    dF = [r[1] for r in rows]
    k0 = len(rows) // 2 if len(rows) > 2 else 0
    slope = loglog_slope(m[k0:], dF[k0:])
    case = _case(base.n, m, [r[7] for r in rows], [r[8] for r in rows])
    return ConvergenceRun(base.label, name, vals, m, dF, [r[2] for r in rows], [r[3] for r in rows],
                          [r[4] for r in rows], [r[5] for r in rows], [r[6] for r in rows], case, slope,
                          [k0, len(rows)], notes)


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
