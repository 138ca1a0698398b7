"""Inner approximations of the localization set: largest ball and ellipsoid.

Both programs let the free common-mode scalar of the X_d band depend
affinely on the position inside the candidate set (``alpha = alpha0 + h.u``),
which is never worse than a fixed alpha and usually strictly better.
"""
from dataclasses import dataclass

import numpy as np

from .conic import ConeProgram, Layout, Status
from .domgraph import normalized
from .errors import EmptyLocalizationSet, SolverFailure


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def to_dict(self):
        return {"center": np.asarray(self.center).tolist(), "radius": float(self.radius)}

    def boundary(self, directions):
        return self.center + self.radius * directions


@dataclass(frozen=True, eq=False)
class InnerEllipsoid:
    """The set ``{c + W u : ||u|| <= 1}`` with W symmetric PSD."""

    center: np.ndarray
    shape: np.ndarray

    def to_dict(self):
        return {"center": np.asarray(self.center).tolist(), "shape": np.asarray(self.shape).tolist()}

    def boundary(self, directions):
        return self.center + directions @ self.shape.T

    @property
    def axes(self):
        """Orthonormal semi-axis directions (columns), ascending semi-axis length."""
        _, V = np.linalg.eigh(self.shape)
        return V


def sym_basis(n):
    """Basis of symmetric n x n matrices, stacked as n x n x n(n+1)/2."""
    iu, ju = np.triu_indices(n)
    B = np.zeros((n, n, iu.size))
    B[iu, ju, np.arange(iu.size)] = 1.0
    B[ju, iu, np.arange(iu.size)] = 1.0
    return B


def _check(sol, what):
    if sol.status is Status.INFEASIBLE:
        raise EmptyLocalizationSet(f"{what}: the localization set is empty")
    if not sol.optimal:
        raise SolverFailure(f"{what}: solver returned {sol.backend_status}", sol.status)


def _band_socs(prog, L, nsys, nb, F_of):
    """Add the two robust band constraints per measurement.

    ``F_of(i)`` returns the matrix F with ``F v`` the vector whose norm is the
    worst-case deviation of the band expression for measurement i.
    """
    for i in range(nsys.m):
        F = F_of(i)
        Gi = nsys.G[i]
        up = L.zeros()
        up[L["c"]] = Gi
        up[L["alpha"]] = -1.0
        prog.add_soc(F, np.zeros(F.shape[0]), up, nb.hi[i] - nsys.q0[i])
        dn = L.zeros()
        dn[L["c"]] = -Gi
        dn[L["alpha"]] = 1.0
        prog.add_soc(F, np.zeros(F.shape[0]), dn, nsys.q0[i] - nb.lo[i])


def _ball_socs(prog, L, nsys, nb, radius_var):
    n = nsys.n
    for i in range(nsys.m):
        F = np.zeros((n, L.size))
        F[:, L["c"]] = np.eye(n)
        f = L.zeros()
        f[L[radius_var]] = -1.0
        prog.add_soc(F, -nsys.anchors[i], f, np.sqrt(nb.hi[i]))


def inscribed_ball(sys, bounds, recourse=True, tol=None):
    """Largest ball (center, radius) contained in the localization set.

    With ``recourse=False`` the affine dependence of alpha is switched off
    (``h = 0``), which reproduces the fixed-alpha construction.
    """
    nsys, nb, frame = normalized(sys, bounds.widened())
    n = nsys.n
    L = Layout(c=(n,), r=1, alpha=1, h=(n,))
    obj = L.zeros()
    obj[L["r"]] = 1.0
    prog = ConeProgram(L.size, obj, sense="max")

    def F_of(i):
        F = np.zeros((n, L.size))
        F[:, L["h"]] = np.eye(n)
        F[:, L["r"]] = -nsys.G[i]
        return F

    _band_socs(prog, L, nsys, nb, F_of)
    _ball_socs(prog, L, nsys, nb, "r")
    row = L.zeros()
    row[L["r"]] = -1.0
    prog.add_le(row, [0.0])
    if not recourse:
        prog.add_eq(np.eye(L.size)[L["h"]], np.zeros(n))
    sol = prog.solve(tol)
    _check(sol, "inscribed ball")
    v = L.unpack(sol.primal)
    return Ball(frame.to_world(v["c"]), max(float(v["r"]), 0.0) * frame.scale)


def inscribed_ellipsoid(sys, bounds, tol=None):
    """Trace-maximal ellipsoid ``{c + W u}`` contained in the localization set.

    Containment in each outer ball uses the sufficient condition
    ``||c - a_i|| + ||W||_2 <= sqrt(hi_i)`` via ``W <= gamma I``.
    """
    nsys, nb, frame = normalized(sys, bounds.widened())
    n = nsys.n
    B = sym_basis(n)
    nw = B.shape[2]
    L = Layout(c=(n,), w=(nw,), alpha=1, gamma=1, h=(n,))
    wsl = L["w"]
    obj = L.zeros()
    obj[wsl] = np.trace(B)
    prog = ConeProgram(L.size, obj, sense="max")

    def F_of(i):
        F = np.zeros((n, L.size))
        F[:, L["h"]] = np.eye(n)
        F[:, wsl] = -np.einsum("abk,b->ak", B, nsys.G[i])
        return F

    _band_socs(prog, L, nsys, nb, F_of)
    _ball_socs(prog, L, nsys, nb, "gamma")
    C = np.zeros((n, n, L.size))
    C[:, :, wsl] = B
    prog.add_psd(np.zeros((n, n)), C)
    C2 = -C
    C2[:, :, L["gamma"]] = np.eye(n)
    prog.add_psd(np.zeros((n, n)), C2)
    sol = prog.solve(tol)
    _check(sol, "inscribed ellipsoid")
    v = L.unpack(sol.primal)
    W = B @ v["w"]
    W = 0.5 * (W + W.T) * frame.scale
    return InnerEllipsoid(frame.to_world(v["c"]), W)
