"""Certified outer bounds of the localization set.

Every point consistent with the measurements lies in the localization set
X = X_d ∩ (outer balls), so any set containing X is a guaranteed bound.
Two shapes are provided: a box along an orthonormal basis (2n SOCPs) and a
covering ellipsoid (one SDP over the 2^m vertex images of X_d plus an
S-procedure block for the balls).
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .conic import ConeProgram, Layout, Status
from .domgraph import normalized, pinv
from .errors import (
    ArgumentError,
    EmptyLocalizationSet,
    InfeasibleProbe,
    SolverFailure,
    VertexBudgetExceeded,
)
from .inner import sym_basis

VERTEX_CAP = 12
P_REGULARIZATION = 1e-9


@dataclass(frozen=True, eq=False)
class Box:
    """``{sum_i g_i v_i : lo <= g <= hi}``; ``basis`` rows are the v_i."""

    basis: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    solve_time: float = field(default=0.0, compare=False)

    @property
    def center(self):
        return self.basis.T @ (0.5 * (self.lo + self.hi))

    @property
    def half_widths(self):
        return 0.5 * (self.hi - self.lo)

    def contains(self, x, slack=0.0):
        g = np.atleast_2d(x) @ self.basis.T
        ok = np.all((g >= self.lo - slack) & (g <= self.hi + slack), axis=1)
        return bool(ok[0]) if np.ndim(x) == 1 else ok

    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def to_dict(self):
        return {
            "basis": self.basis.tolist(),
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "center": self.center.tolist(),
        }


@dataclass(frozen=True, eq=False)
class OuterEllipsoid:
    """``{x : (x - c)^T P^{-1} (x - c) <= 1}``."""

    center: np.ndarray
    shape: np.ndarray

    def contains(self, x, slack=0.0):
        n = self.center.size
        Pinv = np.linalg.inv(self.shape + P_REGULARIZATION * np.eye(n))
        d = np.atleast_2d(x) - self.center
        ok = np.einsum("ki,ij,kj->k", d, Pinv, d) <= 1.0 + slack
        return bool(ok[0]) if np.ndim(x) == 1 else ok

    def to_dict(self):
        return {"center": self.center.tolist(), "shape": self.shape.tolist()}


def check_basis(basis, n):
    V = np.asarray(basis, dtype=float)
    if V.shape != (n, n) or not np.allclose(V @ V.T, np.eye(n), atol=1e-10):
        raise ArgumentError("basis must be n orthonormal row vectors")
    return V


def _support_program(nsys, nb, direction, sense):
    """max/min direction.x over X = X_d ∩ balls, variables (x, alpha)."""
    n, m = nsys.n, nsys.m
    L = Layout(x=(n,), alpha=1)
    obj = L.zeros()
    obj[L["x"]] = direction
    prog = ConeProgram(L.size, obj, sense=sense)
    ones = np.ones((m, 1))
    prog.add_le(np.hstack([-nsys.G, ones]), nb.hi - nsys.q0)
    prog.add_le(np.hstack([nsys.G, -ones]), nsys.q0 - nb.lo)
    for j in range(m):
        F = np.zeros((n, L.size))
        F[:, L["x"]] = np.eye(n)
        prog.add_soc(F, -nsys.anchors[j], L.zeros(), np.sqrt(nb.hi[j]))
    return prog


def _certified(sol, sense, tol):
    """Objective value pushed outward by the dual bound when it is consistent."""
    p, d = sol.objective_value, sol.dual_objective
    if np.isfinite(d) and abs(d - p) <= 1e3 * tol.gap * (1 + abs(p)):
        return max(p, d) if sense == "max" else min(p, d)
    return p


def outer_box(sys, bounds, basis=None, tol=None, max_workers=1):
    """Minimal box along ``basis`` containing the localization set.

    Returns a :class:`Box` whose ``solve_time`` is the wall time of the 2n
    support-value programs.
    """
    from .conic import DEFAULT_TOLERANCES

    tol = DEFAULT_TOLERANCES if tol is None else tol
    n = sys.n
    V = np.eye(n) if basis is None else check_basis(basis, n)
    nsys, nb, frame = normalized(sys, bounds.widened())
    jobs = [(i, sense) for i in range(n) for sense in ("min", "max")]

    def run(job):
        i, sense = job
        sol = _support_program(nsys, nb, V[i], sense).solve(tol)
        if sol.status is Status.INFEASIBLE:
            raise EmptyLocalizationSet("outer box: the localization set is empty")
        if not sol.optimal:
            raise SolverFailure(f"outer box: solver returned {sol.backend_status}", sol.status)
        return _certified(sol, sense, tol)

    t0 = time.perf_counter()
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            vals = list(pool.map(run, jobs))
    else:
        vals = [run(j) for j in jobs]
    elapsed = time.perf_counter() - t0
    vals = np.array(vals).reshape(n, 2)
    offset = V @ frame.shift
    lo = offset + frame.scale * vals[:, 0]
    hi = offset + frame.scale * vals[:, 1]
    hi = np.maximum(hi, lo)
    return Box(V, lo, hi, elapsed)


def directional_range(c, v, sys, bounds, tol=None):
    """Extreme steps ``g`` such that ``c + g v`` stays in the localization set."""
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ArgumentError("direction must be a unit vector")
    nsys, nb, frame = normalized(sys, bounds.widened())
    c = frame.to_local(np.asarray(c, dtype=float))
    m = nsys.m
    Gv, Gc = nsys.G @ v, nsys.G @ c
    out = []
    for sense in ("min", "max"):
        prog = ConeProgram(2, [1.0, 0.0], sense=sense)
        prog.add_le(np.column_stack([-Gv, np.ones(m)]), nb.hi - nsys.q0 + Gc)
        prog.add_le(np.column_stack([Gv, -np.ones(m)]), nsys.q0 - Gc - nb.lo)
        for i in range(m):
            F = np.column_stack([v, np.zeros_like(v)])
            prog.add_soc(F, c - nsys.anchors[i], [0.0, 0.0], np.sqrt(nb.hi[i]))
        sol = prog.solve(tol)
        if sol.status is Status.INFEASIBLE:
            raise InfeasibleProbe("probe point is not in the localization set")
        if not sol.optimal:
            raise SolverFailure(f"directional range: solver returned {sol.backend_status}", sol.status)
        out.append(sol.objective_value * frame.scale)
    return out[0], out[1]


def hyperrectangle_vertices(bounds):
    """All 2^m vertices of [lo, hi], bit i of the row index selecting hi_i."""
    m = len(bounds)
    bits = np.array(list(product((0, 1), repeat=m)))[:, ::-1]
    return np.where(bits == 1, bounds.hi, bounds.lo)


def vertex_images(sys, bounds, vertex_cap=VERTEX_CAP):
    """Images ``w = (E A^T)^+ E (omega - v) / 2`` of the box vertices of H.

    Under full column rank of E A^T every point of X_d is the image of some
    xi in H, so X_d lies in the convex hull of these points.
    """
    if sys.m > vertex_cap:
        raise VertexBudgetExceeded(f"m={sys.m} exceeds the vertex cap {vertex_cap} (2^m LMI blocks)")
    if not sys.bounded:
        raise ArgumentError("E A^T is rank deficient; X_d is unbounded")
    V = hyperrectangle_vertices(bounds)
    M = 0.5 * pinv(sys.EAT) @ sys.E
    return (sys.omega[None, :] - V) @ M.T


def outer_ellipsoid(sys, bounds, vertex_cap=VERTEX_CAP, tol=None):
    """Trace-minimal ellipsoid covering the localization set.

    Schur-complement blocks force every vertex image into the ellipsoid
    (covering X_d); one S-procedure block with multipliers ``tau >= 0``
    covers the intersection of the outer balls.
    """
    if sys.m > vertex_cap:
        raise VertexBudgetExceeded(f"m={sys.m} exceeds the vertex cap {vertex_cap} (2^m LMI blocks)")
    if not sys.bounded:
        raise ArgumentError("E A^T is rank deficient; the vertex representation of X_d does not exist")
    nsys, nb, frame = normalized(sys, bounds.widened())
    n, m = nsys.n, nsys.m
    W = vertex_images(nsys, nb, vertex_cap)
    B = sym_basis(n)
    L = Layout(P=(B.shape[2],), c=(n,), tau=(m,))
    obj = L.zeros()
    obj[L["P"]] = np.trace(B)
    prog = ConeProgram(L.size, obj, sense="min")

    k = n + 1
    C = np.zeros((k, k, L.size))
    C[1:, 1:, L["P"]] = B
    for j in range(n):
        C[0, 1 + j, L["c"].start + j] = -1.0
        C[1 + j, 0, L["c"].start + j] = -1.0
    for w in W:
        C0 = np.zeros((k, k))
        C0[0, 0] = 1.0
        C0[0, 1:] = w
        C0[1:, 0] = w
        prog.add_psd(C0, C)

    k = 2 * n + 1
    top, mid, bot = slice(0, n), n, slice(n + 1, 2 * n + 1)
    C0 = np.zeros((k, k))
    C0[mid, mid] = 1.0
    C0[top, bot] = np.eye(n)
    C0[bot, top] = np.eye(n)
    C = np.zeros((k, k, L.size))
    for i in range(m):
        t = L["tau"].start + i
        a = nsys.anchors[i]
        C[top, top, t] = np.eye(n)
        C[top, mid, t] = -a
        C[mid, top, t] = -a
        C[mid, mid, t] = a @ a - nb.hi[i]
    for j in range(n):
        C[mid, n + 1 + j, L["c"].start + j] = -1.0
        C[n + 1 + j, mid, L["c"].start + j] = -1.0
    C[bot, bot, L["P"]] = B
    prog.add_psd(C0, C)
    prog.add_le(-np.eye(L.size)[L["tau"]], np.zeros(m))

    sol = prog.solve(tol)
    if sol.status is Status.INFEASIBLE:
        raise EmptyLocalizationSet("outer ellipsoid: infeasible program")
    if not sol.optimal:
        raise SolverFailure(f"outer ellipsoid: solver returned {sol.backend_status}", sol.status)
    v = L.unpack(sol.primal)
    P = B @ v["P"]
    P = 0.5 * (P + P.T) * frame.scale**2
    return OuterEllipsoid(frame.to_world(v["c"]), P)
