"""Simplex kernels behind level-set extraction and partial-cell quadrature.

Every grid cell is split into the n! Kuhn simplices.  Inside a simplex the
field is replaced by its linear interpolant, so

* the level set ``{u = h}`` is a convex polytope whose combinatorial type is
  a product of two simplices; it is triangulated by the staircase
  triangulation (one (n-1)-simplex per monotone lattice path), and
* the fraction of the simplex where ``u < h`` is a sum of B-spline values,
  evaluated with the Cox--de Boor recursion, which needs no divisions by
  differences of nearly equal vertex values.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

__all__ = [
    "kuhn_simplices",
    "cube_corners",
    "staircase_paths",
    "sublevel_fraction",
    "cross_sections",
]


@lru_cache(maxsize=None)
def cube_corners(n: int) -> np.ndarray:
    """Offsets (2**n, n) of the unit-cube corners; corner c has bit i -> axis i."""
    c = np.arange(2**n)
    return ((c[:, None] >> np.arange(n)[None, :]) & 1).astype(np.intp)


@lru_cache(maxsize=None)
def kuhn_simplices(n: int) -> np.ndarray:
    """Corner indices (n!, n+1) of the Kuhn triangulation of the unit n-cube."""
    out = []
    for perm in itertools.permutations(range(n)):
        v = 0
        verts = [v]
        for axis in perm:
            v |= 1 << axis
            verts.append(v)
        out.append(verts)
    return np.asarray(out, dtype=np.intp)


@lru_cache(maxsize=None)
def staircase_paths(k: int, l: int) -> np.ndarray:
    """Monotone lattice paths from (0, 0) to (k-1, l-1), shape (paths, k+l-1, 2)."""
    steps = k + l - 2
    paths = []
    for downs in itertools.combinations(range(steps), k - 1):
        i = j = 0
        path = [(0, 0)]
        for s in range(steps):
            if s in downs:
                i += 1
            else:
                j += 1
            path.append((i, j))
        paths.append(path)
    return np.asarray(paths, dtype=np.intp).reshape(len(paths), steps + 1, 2)


def _bspline_density(knots: np.ndarray, x: float | np.ndarray) -> np.ndarray:
    """Normalised B-spline M(x) with the given sorted knots (rows).

    ``knots`` has shape (N, p+1); the result integrates to one over the knot
    span and equals the density of the linear interpolant u at level x when
    the knots are the vertex values of a p-simplex.
    """
    N, m = knots.shape
    x = np.broadcast_to(np.asarray(x, dtype=float), (N,))
    # order-1 pieces: 1/(t_{i+1}-t_i) on [t_i, t_{i+1})
    width = knots[:, 1:] - knots[:, :-1]
    inside = (knots[:, :-1] <= x[:, None]) & (x[:, None] < knots[:, 1:]) & (width > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        M = np.where(inside, 1.0 / np.where(width > 0, width, 1.0), 0.0)
    for k in range(2, m):
        span = knots[:, k:] - knots[:, :-k]
        left = (x[:, None] - knots[:, : m - k]) * M[:, :-1]
        right = (knots[:, k:] - x[:, None]) * M[:, 1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            M = np.where(span > 0, k * (left + right) / ((k - 1) * np.where(span > 0, span, 1.0)), 0.0)
    return M[:, 0]


def sublevel_fraction(values: np.ndarray, level: float = 0.0) -> np.ndarray:
    """Fraction of each simplex where the linear interpolant is below ``level``.

    ``values`` has shape (N, n+1).  Peeling off the lowest vertex v0 splits
    the sub-level polytope into the cone from v0 over the cut facet and the
    sub-level set of the opposite face, which gives

        F = sum_{i < k} (level - u_(i)) / (n - i) * M(u_(i), ..., u_(n))

    with u sorted ascending and k the number of vertices below the level.
    """
    u = np.sort(np.asarray(values, dtype=float), axis=1)
    N, m = u.shape
    n = m - 1
    frac = np.zeros(N)
    # level == max vertex is a null set away from "everything below"
    frac[u[:, -1] <= level] = 1.0
    cut = (u[:, 0] < level) & (u[:, -1] > level)
    if not np.any(cut):
        return frac
    uc = u[cut]
    total = np.zeros(uc.shape[0])
    for i in range(n):
        below = uc[:, i] < level
        if not np.any(below):
            break
        dens = _bspline_density(uc[below][:, i:], level)
        total[below] += (level - uc[below, i]) / (n - i) * dens
    frac[cut] = np.clip(total, 0.0, 1.0)
    return frac


def cross_sections(values, points, level, attributes=None):
    """Intersect simplices with the hyperplane ``u = level``.

    Parameters
    ----------
    values : (N, n+1) vertex values of the linear interpolant.
    points : (N, n+1, n) vertex coordinates.
    level : float
    attributes : optional (N, n+1, d) per-vertex data interpolated along the
        cut edges exactly like the coordinates.

    Returns
    -------
    areas : (F,) (n-1)-volumes of the facets.
    centroids : (F, n)
    attrs : (F, d) attribute averages at the facet vertices, or None.
    owner : (F,) index of the simplex each facet came from.

    Vertices with ``u == level`` count as above the level.
    """
    values = np.asarray(values, dtype=float)
    points = np.asarray(points, dtype=float)
    N, m = values.shape
    n = m - 1
    if attributes is not None:
        attributes = np.asarray(attributes, dtype=float)
    order = np.argsort(values, axis=1, kind="stable")
    k_below = np.sum(values < level, axis=1)

    areas, cents, attrs, owners = [], [], [], []
    norm = math.factorial(n - 1)
    for k in range(1, n + 1):
        sel = np.nonzero(k_below == k)[0]
        if sel.size == 0:
            continue
        idx = order[sel]
        ua = np.take_along_axis(values[sel], idx[:, :k], axis=1)  # (S, k)
        ub = np.take_along_axis(values[sel], idx[:, k:], axis=1)  # (S, l)
        pa = np.take_along_axis(points[sel], idx[:, :k, None], axis=1)
        pb = np.take_along_axis(points[sel], idx[:, k:, None], axis=1)
        t = (level - ua[:, :, None]) / (ub[:, None, :] - ua[:, :, None])  # (S, k, l)
        P = pa[:, :, None, :] + t[..., None] * (pb[:, None, :, :] - pa[:, :, None, :])
        if attributes is not None:
            aa = np.take_along_axis(attributes[sel], idx[:, :k, None], axis=1)
            ab = np.take_along_axis(attributes[sel], idx[:, k:, None], axis=1)
            A = aa[:, :, None, :] + t[..., None] * (ab[:, None, :, :] - aa[:, :, None, :])
        for path in staircase_paths(k, m - k):
            V = P[:, path[:, 0], path[:, 1], :]  # (S, n, n)
            E = V[:, 1:, :] - V[:, :1, :]
            if n == 1:
                area = np.ones(sel.size)
            elif n == 2:
                area = np.linalg.norm(E[:, 0, :], axis=1)
            elif n == 3:
                area = 0.5 * np.linalg.norm(np.cross(E[:, 0, :], E[:, 1, :]), axis=1)
            else:
                G = np.einsum("sik,sjk->sij", E, E)
                area = np.sqrt(np.clip(np.linalg.det(G), 0.0, None)) / norm
            areas.append(area)
            cents.append(V.mean(axis=1))
            owners.append(sel)
            if attributes is not None:
                attrs.append(A[:, path[:, 0], path[:, 1], :].mean(axis=1))
    if not areas:
        d = 0 if attributes is None else attributes.shape[2]
        return (np.zeros(0), np.zeros((0, n)),
                None if attributes is None else np.zeros((0, d)), np.zeros(0, dtype=np.intp))
    return (
        np.concatenate(areas),
        np.concatenate(cents),
        None if attributes is None else np.concatenate(attrs),
        np.concatenate(owners),
    )
