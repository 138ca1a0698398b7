"""Measurement models and the unified squared-range bounds.

Every supported measurement model (squared or plain distances, absolute or
relative errors) is reduced to interval bounds ``lo <= ||x - a_i||^2 <= hi``
on the squared distance to each anchor.  Squared quantities carry squared
length units; the library itself is unit-agnostic.
"""
import enum
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, InvalidBatch

SCHEMA = "rangebound/1"


class Kind(enum.Enum):
    SQUARED = "squared"
    PLAIN = "plain"


class ErrorMode(enum.Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


def _frozen(a, ndim=None):
    a = np.array(a, dtype=float)
    if ndim is not None and a.ndim != ndim:
        raise ArgumentError(f"expected a {ndim}-d array, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MeasurementBatch:
    """m range readings of one kind, each with an error interval."""

    kind: Kind
    mode: ErrorMode
    values: np.ndarray
    err_lo: np.ndarray
    err_hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "mode", ErrorMode(self.mode))
        m = np.size(self.values)
        for name in ("values", "err_lo", "err_hi"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (m,))
            object.__setattr__(self, name, _frozen(arr, 1))

    def __len__(self):
        return self.values.size

    def validate(self):
        """Raise InvalidBatch naming the first index that breaks an invariant."""
        for i in range(len(self)):
            lo, hi, v = self.err_lo[i], self.err_hi[i], self.values[i]
            if not (np.isfinite(lo) and np.isfinite(hi) and np.isfinite(v)):
                raise InvalidBatch(i, "non-finite reading or error bound")
            if lo > hi:
                raise InvalidBatch(i, f"err_lo={lo} exceeds err_hi={hi}")
            if self.mode is ErrorMode.RELATIVE and lo <= -1.0:
                raise InvalidBatch(i, f"relative err_lo={lo} must exceed -1")
            if self.mode is ErrorMode.ABSOLUTE and v < hi:
                raise InvalidBatch(i, f"reading {v} is below err_hi={hi}")
            if self.mode is ErrorMode.RELATIVE and v < 0:
                raise InvalidBatch(i, f"negative reading {v}")
        return self


@dataclass(frozen=True, eq=False)
class BoundsVector:
    """Interval bounds on the squared anchor distances (squared length units)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _frozen(self.lo, 1), _frozen(self.hi, 1)
        if lo.shape != hi.shape:
            raise ArgumentError("lo and hi must have the same length")
        if np.any(lo < 0) or np.any(lo > hi):
            raise ArgumentError("bounds must satisfy 0 <= lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __len__(self):
        return self.lo.size

    def widened(self, rel=1e-12, floor=1e-9):
        """Return bounds whose intervals are at least ``2*max(floor, rel*hi)`` wide.

        Interior-point solvers need a strictly feasible set; exact (noiseless)
        bounds collapse the localization set to a point.
        """
        w = np.maximum(floor, rel * self.hi)
        narrow = (self.hi - self.lo) < 2 * w
        if not narrow.any():
            return self
        lo = np.where(narrow, np.maximum(self.lo - w, 0.0), self.lo)
        hi = np.where(narrow, self.hi + w, self.hi)
        return BoundsVector(lo, hi)

    def to_dict(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class Scenario:
    """Anchors in R^n plus one measurement per anchor."""

    anchors: np.ndarray
    batch: MeasurementBatch
    true_location: np.ndarray = None

    def __post_init__(self):
        anchors = _frozen(self.anchors, 2)
        m, n = anchors.shape
        if m < 2:
            raise ArgumentError("at least two anchors are required")
        if len(self.batch) != m:
            raise ArgumentError(f"{m} anchors but {len(self.batch)} measurements")
        if m < n + 1:
            warnings.warn(
                f"only {m} anchors in dimension {n}; the localization set may be unbounded",
                stacklevel=3,
            )
        object.__setattr__(self, "anchors", anchors)
        if self.true_location is not None:
            x = _frozen(self.true_location, 1)
            if x.size != n:
                raise ArgumentError("true_location has the wrong dimension")
            object.__setattr__(self, "true_location", x)

    @property
    def dim(self):
        return self.anchors.shape[1]

    @property
    def m(self):
        return self.anchors.shape[0]

    def to_dict(self):
        b = self.batch
        return {
            "schema": SCHEMA,
            "dim": self.dim,
            "anchors": self.anchors.tolist(),
            "measurements": {
                "kind": b.kind.value,
                "mode": b.mode.value,
                "values": b.values.tolist(),
                "err_lo": b.err_lo.tolist(),
                "err_hi": b.err_hi.tolist(),
            },
            "true_location": None if self.true_location is None else self.true_location.tolist(),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc):
        try:
            schema = doc.get("schema", SCHEMA)
            if schema != SCHEMA:
                raise ArgumentError(f"unsupported schema {schema!r}")
            meas = doc["measurements"]
            batch = MeasurementBatch(
                kind=Kind(meas["kind"]),
                mode=ErrorMode(meas["mode"]),
                values=meas["values"],
                err_lo=meas["err_lo"],
                err_hi=meas["err_hi"],
            )
            anchors = np.asarray(doc["anchors"], dtype=float)
            if anchors.ndim != 2 or anchors.shape[1] != int(doc["dim"]):
                raise ArgumentError("anchors do not match dim")
            return cls(anchors, batch, doc.get("true_location"))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ArgumentError):
                raise
            raise ArgumentError(f"malformed scenario document: {exc}") from exc

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def build_bounds(batch, validate=True):
    """Map a measurement batch to squared-distance bounds.

    ======== ======== ===================== =====================
    kind     mode     lo                    hi
    ======== ======== ===================== =====================
    squared  absolute y - eps_hi            y - eps_lo
    squared  relative y / (1 + eps_hi)      y / (1 + eps_lo)
    plain    absolute (z - e_hi)^2          (z - e_lo)^2
    plain    relative z^2 / (1 + e_hi)^2    z^2 / (1 + e_lo)^2
    ======== ======== ===================== =====================

    Negative lower bounds (only reachable with ``validate=False``) are
    clamped to zero with a warning.
    """
    if validate:
        batch.validate()
    v, elo, ehi = batch.values, batch.err_lo, batch.err_hi
    if batch.kind is Kind.SQUARED:
        if batch.mode is ErrorMode.ABSOLUTE:
            lo, hi = v - ehi, v - elo
        else:
            lo, hi = v / (1 + ehi), v / (1 + elo)
    else:
        if batch.mode is ErrorMode.ABSOLUTE:
            lo, hi = (v - ehi) ** 2, (v - elo) ** 2
        else:
            lo, hi = v**2 / (1 + ehi) ** 2, v**2 / (1 + elo) ** 2
    neg = np.flatnonzero(lo < 0)
    if neg.size:
        warnings.warn(f"negative lower bound clamped to 0 at indices {neg.tolist()}", stacklevel=2)
        lo = np.maximum(lo, 0.0)
    return BoundsVector(lo, hi)


def default_tolerance(bounds):
    return 1e-9 * (1.0 + bounds.hi)


def squared_distances(x, anchors):
    """Squared distances from each row of ``x`` (k x n) to each anchor: k x m."""
    x = np.atleast_2d(x)
    d = x[:, None, :] - anchors[None, :, :]
    return np.einsum("kmn,kmn->km", d, d)


def membership_true(x, scenario, bounds, tol=None):
    """Test membership in the intersection of the m spherical shells.

    ``x`` may be a single point or a k x n stack; the result is a bool or a
    length-k boolean array accordingly.
    """
    x = np.asarray(x, dtype=float)
    tol = default_tolerance(bounds) if tol is None else tol
    d2 = squared_distances(x, scenario.anchors)
    ok = np.all((d2 >= bounds.lo - tol) & (d2 <= bounds.hi + tol), axis=1)
    return bool(ok[0]) if x.ndim == 1 else ok


def membership_balls(x, scenario, bounds, tol=None):
    """Test membership in the intersection of the m outer measurement balls."""
    x = np.asarray(x, dtype=float)
    tol = default_tolerance(bounds) if tol is None else tol
    d2 = squared_distances(x, scenario.anchors)
    ok = np.all(d2 <= bounds.hi + tol, axis=1)
    return bool(ok[0]) if x.ndim == 1 else ok
