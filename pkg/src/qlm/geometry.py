"""Curvature of graph[f] in R^{n+1} and the admissibility checks built on it.

Conventions.  With W = sqrt(1 + |Df|^2) the induced metric is
g = I + Df Df^T (g^{-1} = I - Df Df^T / W^2), the second fundamental form is
Pi = Hess f / W, and Hhat = tr_g Pi.  This is the downward unit normal
convention: a convex f (a bowl) has Hhat > 0 and so do the
Schwarzschild graphs, while the upper hemisphere of radius rho gets
Hhat = -n/rho.  Flipping the normal changes the sign of Hhat only; R and
every inequality checked downstream are unchanged.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from ._validation import DomainError, HorizonProximityError, PreconditionError, check_graph
from .level_sets import default_ladder, extract_level_set, regularity_threshold

__all__ = [
    "GraphCurvatureSample",
    "induced_metric",
    "second_fundamental_form",
    "graph_mean_curvature",
    "scalar_curvature",
    "principal_curvatures",
    "scalar_curvature_array",
    "graph_mean_curvature_array",
    "curvature_sample",
    "nonnegative_scalar_curvature",
    "check_admissibility",
    "mean_curvature_sign_check",
    "ball_criterion",
    "AdmissibilityReport",
    "SignReport",
    "BallCriterionReport",
]


# --------------------------------------------------------------------------- array kernels

def induced_metric(grad):
    grad = np.asarray(grad, dtype=float)
    n = grad.shape[-1]
    return np.eye(n) + grad[..., :, None] * grad[..., None, :]


def _inverse_metric(grad):
    n = grad.shape[-1]
    W2 = 1.0 + np.sum(grad**2, axis=-1)
    return np.eye(n) - grad[..., :, None] * grad[..., None, :] / W2[..., None, None]


def second_fundamental_form_array(grad, hess):
    W = np.sqrt(1.0 + np.sum(np.asarray(grad) ** 2, axis=-1))
    return np.asarray(hess) / W[..., None, None]


def graph_mean_curvature_array(grad, hess):
    """tr_g(Hess f / W) = (Lap f - Hess f(Df, Df) / W^2) / W."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    W2 = 1.0 + np.sum(grad**2, axis=-1)
    lap = np.trace(hess, axis1=-2, axis2=-1)
    hgg = np.einsum("...i,...ij,...j->...", grad, hess, grad)
    return (lap - hgg / W2) / np.sqrt(W2)


def second_fundamental_norm2(grad, hess):
    """|Pi|_g^2 = g^{ik} g^{jl} Pi_ij Pi_kl."""
    ginv = _inverse_metric(np.asarray(grad, dtype=float))
    P = second_fundamental_form_array(grad, hess)
    A = ginv @ P
    return np.einsum("...ij,...ji->...", A, A)


def scalar_curvature_array(grad, hess):
    """R = Hhat^2 - |Pi|_g^2 (Gauss equation in flat ambient space)."""
    H = graph_mean_curvature_array(grad, hess)
    return H * H - second_fundamental_norm2(grad, hess)


def principal_curvatures(grad, hess):
    """Eigenvalues of g^{-1/2} Pi g^{-1/2}, ascending along the last axis.

    g^{-1/2} = I - (1 - 1/W) u u^T with u = Df / |Df|.
    """
    grad = np.asarray(grad, dtype=float)
    n = grad.shape[-1]
    s = np.linalg.norm(grad, axis=-1)
    W = np.sqrt(1.0 + s * s)
    safe = np.where(s > 0, s, 1.0)
    u = grad / safe[..., None]
    c = np.where(s > 0, 1.0 - 1.0 / W, 0.0)
    S = np.eye(n) - c[..., None, None] * u[..., :, None] * u[..., None, :]
    P = second_fundamental_form_array(grad, hess)
    M = S @ P @ S
    return np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))


def max_sectional_product(kappa):
    """max_{i<j} kappa_i kappa_j per sample."""
    k = np.asarray(kappa)
    n = k.shape[-1]
    if n < 2:
        return np.zeros(k.shape[:-1])
    prod = k[..., :, None] * k[..., None, :]
    iu = np.triu_indices(n, 1)
    return prod[..., iu[0], iu[1]].max(axis=-1)


def nonnegative_scalar_curvature(field, r_tol: float = 1e-6) -> bool:
    """Whether sampled R >= -r_tol * max |Pi|_g^2 (rounding-level negatives allowed)."""
    _, grad, hess = field.sample_derivatives()
    if not len(grad):
        return True
    R = scalar_curvature_array(grad, hess)
    scale = float(np.max(second_fundamental_norm2(grad, hess)))
    return bool(np.min(R) >= -r_tol * scale)


# --------------------------------------------------------------------------- node API

@dataclass(frozen=True)
class GraphCurvatureSample:
    point: np.ndarray
    metric: np.ndarray
    second_fundamental_form: np.ndarray
    mean_curvature: float
    scalar_curvature: float
    principal_curvatures: np.ndarray
    max_sectional: float

    def to_dict(self):
        return {k: (v.tolist() if isinstance(v, np.ndarray) else float(v)) for k, v in asdict(self).items()}


def _node_derivatives(field, node):
    """(point, grad, hess) at a grid node, or at a point / radius of a radial graph."""
    check_graph(field)
    from .domain import NEAR_INNER, ScalarField

    if isinstance(field, ScalarField):
        node = field._check_node(node)
        grad, hess = field.derivative_arrays()
        g, H = grad[node], hess[node]
        s = float(np.linalg.norm(g))
        if field.mask[node] == NEAR_INNER or not np.isfinite(s) or s > field.slope_cap:
            raise HorizonProximityError(f"node {node} lies in the horizon collar (|Df| = {s:.3g})")
        return field.point_of(node), g, H
    x = np.asarray(node, dtype=float)
    if x.ndim == 0:
        x = np.eye(field.n)[0] * float(x)
    r = float(np.linalg.norm(x))
    if r > field.R * (1 + 1e-12) or r < field.r_inner:
        raise DomainError(f"point at radius {r:.6g} is outside U \\ U_o")
    g, H = field.derivatives_at_points(x[None, :])
    s = float(np.linalg.norm(g[0]))
    if not np.isfinite(s) or s > 1e6:
        raise HorizonProximityError(f"radius {r:.6g} lies in the horizon collar (|Df| = {s:.3g})")
    return x, g[0], H[0]


def second_fundamental_form(field, node):
    """Pi = Hess f / W at a node (coordinate frame, indices down)."""
    _, g, H = _node_derivatives(field, node)
    return second_fundamental_form_array(g, H)


def graph_mean_curvature(field, node) -> float:
    _, g, H = _node_derivatives(field, node)
    return float(graph_mean_curvature_array(g, H))


def scalar_curvature(field, node) -> float:
    _, g, H = _node_derivatives(field, node)
    return float(scalar_curvature_array(g, H))


def curvature_sample(field, node) -> GraphCurvatureSample:
    x, g, H = _node_derivatives(field, node)
    k = principal_curvatures(g, H)
    return GraphCurvatureSample(
        np.asarray(x, dtype=float), induced_metric(g), second_fundamental_form_array(g, H),
        float(graph_mean_curvature_array(g, H)), float(scalar_curvature_array(g, H)), k,
        float(max_sectional_product(k)),
    )


# --------------------------------------------------------------------------- reports

PASS, FAIL, UNVERIFIABLE = "pass", "fail", "unverifiable"


@dataclass
class AdmissibilityReport:
    min_R: float
    R_scale: float
    R_verdict: str
    negative_R_certificate: dict | None
    mean_convex_fraction: float
    levels_checked: int
    mean_convex_verdict: str
    outer_minimizing_verdict: str
    outer_minimizing_reason: str
    horizon_oscillation: list
    horizon_verdict: str
    verdict: str = ""
    notes: list = dc_field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _combine(*verdicts):
    if FAIL in verdicts:
        return FAIL
    if UNVERIFIABLE in verdicts:
        return UNVERIFIABLE
    return PASS


def _level_convex(ls, tol):
    """Facetwise convexity of Sigma_h: the tangential part of Hess f / |Df| is PSD."""
    if ls.empty:
        return True
    g, H = ls.grad, ls.hess
    s = ls.slope
    u = g / s[:, None]
    P = np.eye(ls.n) - u[:, :, None] * u[:, None, :]
    A = P @ H @ P / s[:, None, None]
    ev = np.linalg.eigvalsh(0.5 * (A + np.swapaxes(A, -1, -2)))
    scale = max(float(np.max(np.abs(ev))), 1e-300)
    return bool(np.all(ev >= -tol * scale))


def check_admissibility(field, K: int = 32, r_tol: float = 1e-6, osc_tol: float = 1e-6,
                        convex_tol: float = 1e-6) -> AdmissibilityReport:
    """Sampled checks of non-negative R, mean convex and outer-minimizing level
    sets, and local constancy of f on each horizon component.

    ``r_tol`` is relative to the largest |Pi|_g^2 sampled and ``osc_tol`` to
    the range of f.  Never raises; each check gets pass, fail or
    unverifiable.
    """
    check_graph(field)
    pts, grad, hess = field.sample_derivatives()
    notes = []
    if len(pts):
        R = scalar_curvature_array(grad, hess)
        scale = float(np.max(second_fundamental_norm2(grad, hess)))
        i = int(np.argmin(R))
        min_R = float(R[i])
        if min_R >= -r_tol * max(scale, 1e-300) or scale == 0.0:
            r_verdict, cert = PASS, None
        else:
            r_verdict = FAIL
            cert = {"point": pts[i].tolist(), "R": min_R}
    else:
        min_R, scale, r_verdict, cert = float("nan"), 0.0, UNVERIFIABLE, None
        notes.append("no interior samples")

    lo, hi = field.value_range()
    if hi - lo <= 0:
        mc_frac, checked, mc_verdict = 1.0, 0, PASS
        om_verdict, om_reason = PASS, "no level sets in range"
    else:
        eps = regularity_threshold(field)
        sets = [extract_level_set(field, h, eps_reg=eps) for h in default_ladder(field, K)]
        sets = [s for s in sets if s.regular]
        checked = len(sets)
        good = [s.mean_convex for s in sets]
        mc_frac = float(np.mean(good)) if sets else float("nan")
        mc_verdict = PASS if sets and all(good) else (FAIL if sets else UNVERIFIABLE)
        if getattr(field, "radial_monotone", False):
            om_verdict, om_reason = PASS, "radially monotone family: level sets are round spheres"
        elif sets and all(_level_convex(s, convex_tol) for s in sets):
            om_verdict, om_reason = PASS, "all sampled level sets are convex"
        else:
            om_verdict, om_reason = UNVERIFIABLE, "no sufficient condition holds"

    osc = []
    inner = getattr(field, "domain", None)
    ncomp = len(inner.inner) if inner is not None else (1 if getattr(field, "has_horizon", False) else 0)
    if ncomp == 0:
        h_verdict = PASS
        notes.append("horizon absent")
    elif inner is None:
        osc = [0.0]
        h_verdict = PASS
    else:
        for k in range(ncomp):
            b = field.boundary_values(k)
            osc.append(float(np.ptp(b)) if b.size else float("nan"))
        span = max(hi - lo, 1e-300)
        if any(not np.isfinite(o) for o in osc):
            h_verdict = UNVERIFIABLE
        else:
            h_verdict = PASS if all(o <= osc_tol * span for o in osc) else FAIL
    rep = AdmissibilityReport(min_R, scale, r_verdict, cert, mc_frac, checked, mc_verdict, om_verdict, om_reason,
                              osc, h_verdict, notes=notes)
    rep.verdict = _combine(r_verdict, mc_verdict, om_verdict, h_verdict)
    return rep


@dataclass
class SignReport:
    positive: int
    negative: int
    zero: int
    min_H: float
    max_H: float
    verdict: str
    sign: int

    def to_dict(self):
        return asdict(self)


def mean_curvature_sign_check(field, tol: float = 1e-9) -> SignReport:
    """Histogram of sign(Hhat) over interior samples.

    Values with |Hhat| <= tol count as zero; the verdict is
    ``degenerate-zero`` when every sample is zero, ``single-signed`` when
    min * max >= -tol, and ``mixed`` otherwise.
    """
    check_graph(field)
    _, grad, hess = field.sample_derivatives()
    H = graph_mean_curvature_array(grad, hess) if len(grad) else np.zeros(0)
    pos = int(np.count_nonzero(H > tol))
    neg = int(np.count_nonzero(H < -tol))
    zero = int(H.size - pos - neg)
    mn = float(H.min()) if H.size else 0.0
    mx = float(H.max()) if H.size else 0.0
    if pos == 0 and neg == 0:
        verdict, sign = "degenerate-zero", 0
    elif mn * mx >= -tol:
        verdict, sign = "single-signed", 1 if pos else -1
    else:
        verdict, sign = "mixed", 0
    return SignReport(pos, neg, zero, mn, mx, verdict, sign)


@dataclass
class BallCriterionReport:
    C: float
    m_BY: float
    threshold: float
    verdict: str

    def to_dict(self):
        return asdict(self)


def ball_criterion(field) -> BallCriterionReport:
    """Test m_BY(dU) < 1 / (2C), with C^2 the largest sectional curvature (n = 3)."""
    check_graph(field)
    if field.n != 3:
        raise PreconditionError("the ball criterion is stated for n = 3")
    from .mass import boundary_mass

    _, grad, hess = field.sample_derivatives()
    k = principal_curvatures(grad, hess)
    smax = float(np.max(max_sectional_product(k))) if len(k) else 0.0
    C = float(np.sqrt(max(smax, 0.0)))
    m = boundary_mass(field)
    if C == 0.0:
        return BallCriterionReport(0.0, m, float("inf"), "trivially satisfied (flat)")
    ls = extract_level_set(field, field.boundary_level_value())
    if ls.empty or not _level_convex(ls, 1e-6) or not ls.mean_convex:
        raise PreconditionError("boundary level set is not strictly convex")
    thr = 1.0 / (2.0 * C)
    return BallCriterionReport(C, m, thr, "no closed minimal surfaces" if m < thr else "inconclusive")
