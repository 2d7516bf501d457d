"""Estimator-style wrappers: configure with keyword parameters, ``fit`` a graph,
read fitted attributes ending in ``_``, and ``transform`` height arrays."""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_graph
from .flat import decompose, flat_bound
from .level_sets import extract_level_set, regularity_threshold
from .mass import MeanConvexityWarning, brown_york_mass, lam_functional, mass_report
from .stability import stability_report

__all__ = ["QuasiLocalMass", "StabilityAnalyzer", "FlatDistance"]


def _heights(X):
    h = np.asarray(X, dtype=float).reshape(-1)
    if not np.all(np.isfinite(h)):
        raise ValueError("heights must be finite")
    return h


class QuasiLocalMass(TransformerMixin, BaseEstimator):
    """Brown-York mass and Lam functional of the level sets of a graph.

    ``transform(heights)`` returns an (k, 2) array of (m_BY, L).
    """

    def __init__(self, K: int = 200, tol: float = 0.01):
        self.K = K
        self.tol = tol

    def fit(self, field, y=None):
        check_graph(field)
        self.report_ = mass_report(field, K=self.K, tol=self.tol)
        self.m_BY_ = self.report_.m_BY
        self.field_ = field
        return self

    def transform(self, X):
        check_is_fitted(self, "report_")
        eps = regularity_threshold(self.field_)
        out = np.empty((0, 2))
        rows = []
        for h in _heights(X):
            ls = extract_level_set(self.field_, h, eps_reg=eps)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", MeanConvexityWarning)
                rows.append((brown_york_mass(ls), lam_functional(ls)))
        return np.array(rows, dtype=float) if rows else out


class StabilityAnalyzer(BaseEstimator):
    def __init__(self, xi: float = 1.0, K: int = 200, steps: int = 1000, tol: float = 1e-6):
        self.xi = xi
        self.K = K
        self.steps = steps
        self.tol = tol

    def fit(self, field, y=None):
        check_graph(field)
        self.report_ = stability_report(field, xi=self.xi, K=self.K, steps=self.steps, tol=self.tol)
        self.h_o_ = self.report_.h_o
        self.threshold_ = self.report_.threshold
        return self

    def transform(self, X):
        """Comparison solution Y interpolated at the given heights (NaN below h_o)."""
        check_is_fitted(self, "report_")
        h = _heights(X)
        ode = self.report_.ode
        if ode is None:
            return np.full(h.shape, np.nan)
        y = np.interp(h, ode["h"], ode["Y"], left=np.nan, right=np.nan)
        return y


class FlatDistance(BaseEstimator):
    """Upper bound on the flat distance between a graph and a horizontal slab."""

    def __init__(self, xi: float = 1.0, osc_tol: float = 1e-6):
        self.xi = xi
        self.osc_tol = osc_tol

    def fit(self, field, y=None):
        check_graph(field)
        self.bound_ = flat_bound(field, xi=self.xi)
        self.decomposition_ = decompose(field, self.bound_.h_o, osc_tol=self.osc_tol)
        self.dF_bound_ = self.decomposition_.dF_bound
        self.field_ = field
        return self

    def transform(self, X):
        """d_F bound for a slab at each reference height."""
        check_is_fitted(self, "decomposition_")
        return np.array([decompose(self.field_, h, osc_tol=self.osc_tol).dF_bound for h in _heights(X)])
