"""scikit-learn style front end.

``fit`` takes the anchor matrix as X and the readings as y, and stores the
certified sets; ``predict`` answers membership queries against them.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .domgraph import assemble, membership_localization
from .errors import ArgumentError
from .model import ErrorMode, Kind, MeasurementBatch, build_bounds, membership_true
from .pipeline import LocalizeOptions, localize_bounds


class SetMembershipLocalizer(BaseEstimator):
    """Set-membership localization from interval-bounded range readings.

    Parameters
    ----------
    kind : "plain" or "squared"
        Whether readings are distances or squared distances.
    mode : "absolute" or "relative"
        Error model; ``err_lo``/``err_hi`` bound the additive or relative error.
    err_lo, err_hi : float or array of shape (m,)
    basis : "ellipsoid" or "standard"
        Orientation of the outer box.
    outer_ellipsoid : bool
        Also compute the covering ellipsoid.
    preprocess : bool
        Repair inconsistent bounds before localizing.
    probe_radius : float
        Ball radius requested by the repair step.

    Attributes
    ----------
    bounds_, system_, box_, inner_ball_, inner_ellipsoid_, outer_ellipsoid_,
    estimate_ (point estimate), branch_, enlargement_, result_
    """

    def __init__(self, kind="plain", mode="relative", err_lo=-0.02, err_hi=0.02,
                 basis="ellipsoid", outer_ellipsoid=False, preprocess=False,
                 probe_radius=0.01):
        self.kind = kind
        self.mode = mode
        self.err_lo = err_lo
        self.err_hi = err_hi
        self.basis = basis
        self.outer_ellipsoid = outer_ellipsoid
        self.preprocess = preprocess
        self.probe_radius = probe_radius

    def fit(self, X, y, err_lo=None, err_hi=None):
        """X: (m, n) anchors, y: (m,) readings.  Per-call bounds override the params."""
        A = check_array(X, dtype=float, ensure_min_samples=2)
        y = check_array(np.asarray(y, dtype=float).reshape(-1, 1), dtype=float).ravel()
        if y.size != A.shape[0]:
            raise ArgumentError(f"{A.shape[0]} anchors but {y.size} readings")
        lo = self.err_lo if err_lo is None else err_lo
        hi = self.err_hi if err_hi is None else err_hi
        try:
            batch = MeasurementBatch(Kind(self.kind), ErrorMode(self.mode), y, lo, hi)
        except ValueError as exc:
            raise ArgumentError(str(exc)) from exc
        bounds = build_bounds(batch)
        sys = assemble(A)
        opts = LocalizeOptions(preprocess=self.preprocess, probe_radius=self.probe_radius,
                               basis=self.basis, outer_ellipsoid=self.outer_ellipsoid)
        res = localize_bounds(sys, bounds, opts)
        self.result_ = res
        self.bounds_ = res.bounds
        self.system_ = sys
        self.box_ = res.box
        self.inner_ball_ = res.inner_ball
        self.inner_ellipsoid_ = res.inner_ellipsoid
        self.outer_ellipsoid_ = res.outer_ellipsoid
        self.estimate_ = res.estimate.point
        self.branch_ = res.estimate.branch
        self.enlargement_ = res.enlargement
        self.n_features_in_ = A.shape[1]
        return self

    def _points(self, X):
        check_is_fitted(self, "box_")
        P = check_array(X, dtype=float)
        if P.shape[1] != self.n_features_in_:
            raise ArgumentError(f"expected {self.n_features_in_} coordinates, got {P.shape[1]}")
        return P

    def predict(self, X):
        """Boolean membership of each row of X in the localization set."""
        return membership_localization(self._points(X), self.system_, self.bounds_)

    def contains(self, X, which="localization", slack=0.0):
        """Membership in one of: localization, true, box, outer_ellipsoid."""
        P = self._points(X)
        if which == "localization":
            return membership_localization(P, self.system_, self.bounds_)
        if which == "true":
            return membership_true(P, self.system_, self.bounds_)
        if which == "box":
            return self.box_.contains(P, slack)
        if which == "outer_ellipsoid":
            if self.outer_ellipsoid_ is None:
                raise ArgumentError("fit with outer_ellipsoid=True first")
            return self.outer_ellipsoid_.contains(P, slack)
        raise ArgumentError(f"unknown set {which!r}")

    def to_document(self):
        check_is_fitted(self, "result_")
        return self.result_.to_document()
