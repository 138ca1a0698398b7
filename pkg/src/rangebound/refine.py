"""Pre- and post-processing around the convex localization core.

``feasible_point_search`` nudges a central estimate into the true
(nonconvex) feasible set by linearising each inner-sphere constraint at the
point of the sphere closest to the estimate.  ``enlarge_bounds`` finds the
smallest widening of the bounds for which the localization set contains a
ball of a requested radius; it is always feasible and doubles as an outlier
detector.
"""
from dataclasses import dataclass

import numpy as np

from .conic import ConeProgram, Layout, Status
from .domgraph import normalized
from .errors import DegenerateCenter, EmptyLocalizationSet, SolverFailure
from .inner import inscribed_ball
from .model import BoundsVector, membership_true

DEFAULT_PROBE_RADIUS = 0.01
OUTLIER_THRESHOLD = 1e-7
# extra probe radius, in normalized units, absorbing solver tolerance so the
# repaired set really holds a ball of the requested radius
RADIUS_MARGIN = 1e-7
# position accuracy of solver output, relative to the anchor spread; points this
# close to the true set count as members when choosing the estimate branch
CENTER_POSITION_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class FeasibleSearchReport:
    x_hat: np.ndarray
    slacks: np.ndarray
    in_true_set: bool
    linearization_points: np.ndarray

    def to_dict(self):
        return {
            "x_hat": self.x_hat.tolist(),
            "slacks": self.slacks.tolist(),
            "in_true_set": bool(self.in_true_set),
            "linearization_points": self.linearization_points.tolist(),
        }


@dataclass(frozen=True, eq=False)
class EnlargementReport:
    nu_plus: np.ndarray
    nu_minus: np.ndarray
    adjusted_bounds: BoundsVector
    outliers_detected: bool
    probe_radius: float

    def to_dict(self):
        return {
            "nu_plus": self.nu_plus.tolist(),
            "nu_minus": self.nu_minus.tolist(),
            "adjusted_bounds": self.adjusted_bounds.to_dict(),
            "outliers_detected": bool(self.outliers_detected),
            "probe_radius": float(self.probe_radius),
        }


def linearization_points(c, anchors, bounds):
    """Points of the inner spheres on the rays from each anchor through ``c``.

    Returns an m x n array of absolute positions
    ``a_i + sqrt(lo_i) (c - a_i) / ||c - a_i||``; the half-space
    ``2 (p_i - a_i).(x - p_i) >= 0`` is the tangent linearisation of
    ``||x - a_i||^2 >= lo_i`` there.
    """
    A = getattr(anchors, "anchors", anchors)
    d = np.asarray(c, dtype=float)[None, :] - A
    dist = np.linalg.norm(d, axis=1)
    bad = np.flatnonzero(dist < 1e-12)
    if bad.size:
        raise DegenerateCenter(f"center coincides with anchor(s) {bad.tolist()}")
    return A + np.sqrt(bounds.lo)[:, None] * d / dist[:, None]


def feasible_point_search(c, sys, bounds, tol=None):
    """Minimise total violation of the linearised inner-sphere constraints over X."""
    P = linearization_points(c, sys, bounds)
    nsys, nb, frame = normalized(sys, bounds.widened())
    n, m = nsys.n, nsys.m
    Pn = frame.to_local(P)
    normals = 2.0 * (Pn - nsys.anchors)
    L = Layout(x=(n,), s=(m,), alpha=1)
    obj = L.zeros()
    obj[L["s"]] = 1.0
    prog = ConeProgram(L.size, obj, sense="min")
    ones = np.ones((m, 1))
    zero_s = np.zeros((m, m))
    prog.add_le(np.hstack([-nsys.G, zero_s, ones]), nb.hi - nsys.q0)
    prog.add_le(np.hstack([nsys.G, zero_s, -ones]), nsys.q0 - nb.lo)
    for i in range(m):
        F = np.zeros((n, L.size))
        F[:, L["x"]] = np.eye(n)
        prog.add_soc(F, -nsys.anchors[i], L.zeros(), np.sqrt(nb.hi[i]))
    # normals_i.(x - p_i) + s_i >= 0
    prog.add_le(np.hstack([-normals, -np.eye(m), np.zeros((m, 1))]),
                -np.einsum("ij,ij->i", normals, Pn))
    prog.add_le(np.hstack([np.zeros((m, n)), -np.eye(m), np.zeros((m, 1))]), np.zeros(m))
    sol = prog.solve(tol)
    if sol.status is Status.INFEASIBLE:
        raise EmptyLocalizationSet("feasible point search: the localization set is empty")
    if not sol.optimal:
        raise SolverFailure(f"feasible point search: solver returned {sol.backend_status}", sol.status)
    v = L.unpack(sol.primal)
    x_hat = frame.to_world(v["x"])
    slacks = np.maximum(v["s"], 0.0) * frame.scale**2
    return FeasibleSearchReport(x_hat, slacks, membership_true(x_hat, sys, bounds), P)


def _zero_report(bounds, r):
    z = np.zeros(len(bounds))
    return EnlargementReport(z, z.copy(), bounds, False, r)


def enlarge_bounds(sys, bounds, r=DEFAULT_PROBE_RADIUS, tol=None):
    """Smallest bound enlargement making the localization set hold a ball of radius r.

    When the current set already contains such a ball the answer is exactly
    zero and no enlargement program is solved.  Lower-bound reductions are
    capped so the adjusted lower bounds stay nonnegative.
    """
    if r < 0:
        raise ValueError("probe radius must be nonnegative")
    try:
        if inscribed_ball(sys, bounds, tol=tol).radius >= r:
            return _zero_report(bounds, r)
    except (EmptyLocalizationSet, SolverFailure):
        pass

    nsys, nb, frame = normalized(sys, bounds)
    s2 = frame.scale**2
    rn = r / frame.scale + RADIUS_MARGIN
    n, m = nsys.n, nsys.m
    L = Layout(c=(n,), h=(n,), alpha=1, nup=(m,), num=(m,), t=(m,))
    obj = L.zeros()
    obj[L["nup"]] = 1.0
    obj[L["num"]] = 1.0
    prog = ConeProgram(L.size, obj, sense="min")
    up0, dn0, t0 = L["nup"].start, L["num"].start, L["t"].start
    for i in range(m):
        Gi = nsys.G[i]
        F = np.zeros((n, L.size))
        F[:, L["h"]] = np.eye(n)
        g = -rn * Gi
        up = L.zeros()
        up[L["c"]] = Gi
        up[L["alpha"]] = -1.0
        up[up0 + i] = 1.0
        prog.add_soc(F, g, up, nb.hi[i] - nsys.q0[i])
        dn = L.zeros()
        dn[L["c"]] = -Gi
        dn[L["alpha"]] = 1.0
        dn[dn0 + i] = 1.0
        prog.add_soc(F, g, dn, nsys.q0[i] - nb.lo[i])
        # ||c - a_i|| <= t_i
        Fc = np.zeros((n, L.size))
        Fc[:, L["c"]] = np.eye(n)
        ft = L.zeros()
        ft[t0 + i] = 1.0
        prog.add_soc(Fc, -nsys.anchors[i], ft, 0.0)
        # (t_i + r)^2 <= hi_i + nup_i  as  ||(2(t_i + r), hi_i + nup_i - 1)|| <= hi_i + nup_i + 1
        Fr = np.zeros((2, L.size))
        Fr[0, t0 + i] = 2.0
        Fr[1, up0 + i] = 1.0
        fr = L.zeros()
        fr[up0 + i] = 1.0
        prog.add_soc(Fr, [2.0 * rn, nb.hi[i] - 1.0], fr, nb.hi[i] + 1.0)
    eye = np.eye(L.size)
    prog.add_le(-eye[L["nup"]], np.zeros(m))
    prog.add_le(-eye[L["num"]], np.zeros(m))
    prog.add_le(eye[L["num"]], nb.lo)
    sol = prog.solve(tol)
    if not sol.optimal:
        raise SolverFailure(f"bound enlargement: solver returned {sol.backend_status}", sol.status)
    v = L.unpack(sol.primal)
    nu_p = np.maximum(v["nup"], 0.0) * s2
    nu_m = np.clip(v["num"], 0.0, nb.lo) * s2
    adjusted = BoundsVector(np.maximum(bounds.lo - nu_m, 0.0), bounds.hi + nu_p)
    detected = float(nu_p.sum() + nu_m.sum()) > OUTLIER_THRESHOLD
    return EnlargementReport(nu_p, nu_m, adjusted, detected, r)


@dataclass(frozen=True, eq=False)
class CentralEstimate:
    point: np.ndarray
    branch: str  # "center" or "qp"
    search: FeasibleSearchReport = None


def central_estimate(box, sys, bounds, tol=None):
    """Box center when it lies in the true set, otherwise the local search result.

    Membership of the center is judged up to the positional accuracy of the
    solver, so ties at the boundary favour the center.
    """
    cb = box.center
    A = sys.anchors
    delta = CENTER_POSITION_TOL * float(np.sqrt(np.mean(np.sum((A - A.mean(axis=0)) ** 2, axis=1))))
    slack = 2.0 * np.sqrt(bounds.hi) * delta + delta**2 + 1e-9 * (1.0 + bounds.hi)
    if membership_true(cb, sys, bounds, tol=slack):
        return CentralEstimate(cb, "center")
    rep = feasible_point_search(cb, sys, bounds, tol)
    return CentralEstimate(rep.x_hat, "qp", rep)
