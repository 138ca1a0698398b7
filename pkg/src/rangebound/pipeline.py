"""End-to-end localization: bounds, optional repair, outer and inner sets, estimates."""
import time
from dataclasses import dataclass, field

import numpy as np

from .domgraph import assemble, diagnose
from .errors import ArgumentError, EmptyLocalizationSet, RangeBoundError
from .inner import inscribed_ball, inscribed_ellipsoid
from .model import SCHEMA, build_bounds
from .outer import VERTEX_CAP, directional_range, outer_box, outer_ellipsoid
from .refine import DEFAULT_PROBE_RADIUS, central_estimate, enlarge_bounds


@dataclass(frozen=True)
class LocalizeOptions:
    preprocess: bool = False
    probe_radius: float = DEFAULT_PROBE_RADIUS
    basis: str = "ellipsoid"  # or "standard"
    outer_ellipsoid: bool = False
    directional: tuple = None  # direction vector, normalised before use
    vertex_cap: int = VERTEX_CAP
    tol: object = None  # conic.Tolerances

    def __post_init__(self):
        if self.basis not in ("standard", "ellipsoid"):
            raise ArgumentError("basis must be 'standard' or 'ellipsoid'")
        if self.probe_radius < 0:
            raise ArgumentError("probe radius must be nonnegative")


@dataclass(eq=False)
class Localization:
    bounds: object
    system: object
    box: object = None
    inner_ball: object = None
    inner_ellipsoid: object = None
    outer_ellipsoid: object = None
    directional: dict = None
    estimate: object = None
    feasibility: object = None
    enlargement: object = None
    timings: dict = field(default_factory=dict)

    def to_document(self):
        est = self.estimate
        doc = {
            "schema": SCHEMA,
            "bounds": self.bounds.to_dict(),
            "box": self.box.to_dict(),
            "inner_ball": self.inner_ball.to_dict(),
            "inner_ellipsoid": self.inner_ellipsoid.to_dict(),
            "estimates": {
                "c_b": self.box.center.tolist(),
                "c_s": self.inner_ball.center.tolist(),
                "c_e": self.inner_ellipsoid.center.tolist(),
                "x_hat": est.point.tolist(),
                "branch": est.branch,
            },
            "diagnostics": {
                "feasibility": {
                    "nonempty": bool(self.feasibility.nonempty),
                    "bounded": bool(self.feasibility.bounded),
                },
                "enlargement": None if self.enlargement is None else self.enlargement.to_dict(),
                "search": None if est.search is None else est.search.to_dict(),
                "timings": dict(self.timings),
            },
        }
        if self.outer_ellipsoid is not None:
            doc["outer_ellipsoid"] = self.outer_ellipsoid.to_dict()
        if self.directional is not None:
            doc["directional"] = dict(self.directional)
        return doc


class _Stage:
    """Times a named stage and tags escaping errors with its name."""

    def __init__(self, name, timings):
        self.name, self.timings = name, timings

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, et, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.t0
        if isinstance(exc, RangeBoundError) and not hasattr(exc, "stage"):
            exc.stage = self.name
        return False


def localize_bounds(sys, bounds, options=None):
    """Run the pipeline on an assembled system and squared-distance bounds."""
    opt = LocalizeOptions() if options is None else options
    res = Localization(bounds, sys)
    T = res.timings
    if opt.preprocess:
        with _Stage("enlargement", T):
            res.enlargement = enlarge_bounds(sys, bounds, opt.probe_radius, opt.tol)
            bounds = res.bounds = res.enlargement.adjusted_bounds
    with _Stage("feasibility", T):
        res.feasibility = diagnose(sys, bounds, opt.tol)
        if not res.feasibility.nonempty:
            raise EmptyLocalizationSet("the measurement bounds are mutually inconsistent")
        if not res.feasibility.bounded:
            raise ArgumentError("anchors are affinely dependent; the localization set is unbounded")
    with _Stage("inner_ellipsoid", T):
        res.inner_ellipsoid = inscribed_ellipsoid(sys, bounds, opt.tol)
    with _Stage("box", T):
        basis = res.inner_ellipsoid.axes.T if opt.basis == "ellipsoid" else None
        res.box = outer_box(sys, bounds, basis, opt.tol)
    with _Stage("inner_ball", T):
        res.inner_ball = inscribed_ball(sys, bounds, tol=opt.tol)
    with _Stage("estimate", T):
        res.estimate = central_estimate(res.box, sys, bounds, opt.tol)
    if opt.outer_ellipsoid:
        with _Stage("outer_ellipsoid", T):
            res.outer_ellipsoid = outer_ellipsoid(sys, bounds, opt.vertex_cap, opt.tol)
    if opt.directional is not None:
        with _Stage("directional", T):
            v = np.asarray(opt.directional, dtype=float)
            if v.shape != (sys.n,) or not np.linalg.norm(v) > 0:
                raise ArgumentError(f"direction must be a nonzero vector of length {sys.n}")
            v = v / np.linalg.norm(v)
            c = res.box.center
            g0, g1 = directional_range(c, v, sys, bounds, opt.tol)
            res.directional = {"origin": c.tolist(), "direction": v.tolist(),
                               "gamma_min": g0, "gamma_max": g1}
    return res


def localize(scenario, options=None):
    """Full pipeline on a :class:`Scenario`; returns a :class:`Localization`.

    Raises EmptyLocalizationSet when the bounds admit no location (use
    ``preprocess=True`` to repair them) and SolverFailure on numerical
    breakdown; both carry a ``stage`` attribute naming the failing step.
    """
    with _Stage("bounds", {}):
        bounds = build_bounds(scenario.batch)
        sys = assemble(scenario)
    return localize_bounds(sys, bounds, options)
