"""Difference-of-measurements system and the polyhedron X_d.

Subtracting pairs of squared-range equations cancels the quadratic term and
leaves linear equations in x.  With ``Q`` the centering projector the
resulting polyhedron is

    X_d = {x : lo <= Q w - 2 Q A^T x + alpha 1 <= hi  for some scalar alpha}

where ``w_i = ||a_i||^2``.
"""
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .conic import ConeProgram, Status
from .errors import ArgumentError, SolverFailure
from .model import BoundsVector

RANK_RTOL = 1e-9


def incidence_matrix(m):
    """Signed pair-difference matrix, rows ordered (1,2), (1,3), ..., (m-1,m).

    The transpose is the incidence matrix of the complete graph on m nodes.
    """
    if m < 2:
        raise ArgumentError("incidence_matrix needs m >= 2")
    pairs = list(combinations(range(m), 2))
    E = np.zeros((len(pairs), m))
    for k, (i, j) in enumerate(pairs):
        E[k, i] = 1.0
        E[k, j] = -1.0
    return E


def projector(m):
    """Orthogonal projector I - 11^T/m onto the complement of span(1)."""
    if m < 2:
        raise ArgumentError("projector needs m >= 2")
    return np.eye(m) - np.full((m, m), 1.0 / m)


def numerical_rank(M, rtol=RANK_RTOL):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def pinv(M, rtol=RANK_RTOL):
    return np.linalg.pinv(M, rcond=rtol)


@dataclass(frozen=True, eq=False)
class DomSystem:
    anchors: np.ndarray  # m x n
    E: np.ndarray
    Q: np.ndarray
    G: np.ndarray  # 2 Q A^T, m x n
    q0: np.ndarray  # Q w
    EAT: np.ndarray
    omega: np.ndarray
    rank_EAT: int

    @property
    def m(self):
        return self.anchors.shape[0]

    @property
    def n(self):
        return self.anchors.shape[1]

    @property
    def bounded(self):
        return self.rank_EAT == self.n

    def residual(self, x):
        """``Q w - 2 Q A^T x`` for a point or a k x n stack (returns k x m)."""
        return self.q0 - np.atleast_2d(x) @ self.G.T


def assemble(scenario_or_anchors):
    anchors = getattr(scenario_or_anchors, "anchors", scenario_or_anchors)
    A = np.array(anchors, dtype=float)  # m x n, rows are anchors
    m = A.shape[0]
    E = incidence_matrix(m)
    Q = projector(m)
    omega = np.einsum("ij,ij->i", A, A)
    EAT = E @ A
    arrays = dict(anchors=A, E=E, Q=Q, G=2.0 * Q @ A, q0=Q @ omega, EAT=EAT, omega=omega)
    for a in arrays.values():
        a.setflags(write=False)
    return DomSystem(rank_EAT=numerical_rank(EAT), **arrays)


def membership_Xd(x, sys, bounds, tol=None):
    """Closed-form test for x in X_d.

    A scalar alpha must satisfy ``lo_i - r_i <= alpha <= hi_i - r_i`` for all
    i, where ``r = Q w - 2 Q A^T x``; that interval is nonempty iff
    ``max(lo - r) <= min(hi - r)``.
    """
    x = np.asarray(x, dtype=float)
    tol = 1e-9 * (1.0 + bounds.hi) if tol is None else tol
    r = sys.residual(x)
    ok = np.max(bounds.lo - r - tol, axis=1) <= np.min(bounds.hi - r + tol, axis=1)
    return bool(ok[0]) if x.ndim == 1 else ok


def membership_localization(x, sys, bounds, tol=None):
    """Membership in X = X_d intersected with the outer measurement balls."""
    x = np.asarray(x, dtype=float)
    tol_v = 1e-9 * (1.0 + bounds.hi) if tol is None else tol
    d = np.atleast_2d(x)[:, None, :] - sys.anchors[None, :, :]
    in_balls = np.all(np.einsum("kmn,kmn->km", d, d) <= bounds.hi + tol_v, axis=1)
    ok = in_balls & np.atleast_1d(membership_Xd(np.atleast_2d(x), sys, bounds, tol))
    return bool(ok[0]) if x.ndim == 1 else ok


@dataclass(frozen=True)
class Frame:
    """Similarity transform x = shift + scale * x' used to condition programs."""

    shift: np.ndarray
    scale: float

    def to_local(self, x):
        return (np.asarray(x) - self.shift) / self.scale

    def to_world(self, x):
        return self.shift + self.scale * np.asarray(x)


def normalized(sys, bounds):
    """Return ``(sys', bounds', frame)`` in a centred, unit-scale frame.

    Anchors are shifted to their centroid and divided by their RMS spread;
    squared-distance bounds scale by the square of that factor.
    """
    A = sys.anchors
    shift = A.mean(axis=0)
    scale = float(np.sqrt(np.mean(np.sum((A - shift) ** 2, axis=1))))
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    frame = Frame(shift, scale)
    nb = BoundsVector(bounds.lo / scale**2, bounds.hi / scale**2)
    return assemble(frame.to_local(A)), nb, frame


@dataclass(frozen=True)
class FeasibilityDiagnosis:
    nonempty: bool
    bounded: bool
    witness_xi: np.ndarray = None


def diagnose(sys, bounds, tol=None):
    """Decide emptiness and boundedness of X_d.

    X_d is nonempty iff some xi in the box [lo, hi] has E(w - xi) in the range
    of E A^T, i.e. ``U^T E xi = U^T E w`` with U spanning the nullspace of
    A E^T.  That is a linear feasibility problem in xi.
    """
    nsys, nb, frame = normalized(sys, bounds)
    s2 = frame.scale**2
    bounded = sys.bounded
    AET = nsys.EAT.T
    _, sv, Vt = np.linalg.svd(AET)
    rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv.size and sv[0] > 0 else 0
    U = Vt[rank:].T  # p x (p - rank)
    mid = 0.5 * (nb.lo + nb.hi)
    if U.shape[1] == 0:
        return FeasibilityDiagnosis(True, bounded, mid * s2)
    M = U.T @ nsys.E
    # keep an orthonormal basis of the row space so the equalities are independent
    _, ms, mVt = np.linalg.svd(M, full_matrices=False)
    keep = ms > RANK_RTOL * max(ms[0], 1.0) if ms.size else np.zeros(0, bool)
    R = mVt[keep]
    if R.shape[0] == 0:
        return FeasibilityDiagnosis(True, bounded, mid * s2)
    m = sys.m
    prog = ConeProgram(m, np.zeros(m))
    prog.add_eq(R, R @ nsys.omega)
    prog.add_le(np.vstack([np.eye(m), -np.eye(m)]), np.concatenate([nb.hi, -nb.lo]))
    sol = prog.solve(tol)
    if sol.status is Status.INFEASIBLE:
        return FeasibilityDiagnosis(False, bounded, None)
    if not sol.optimal:
        raise SolverFailure(f"feasibility LP failed: {sol.backend_status}", sol.status)
    xi = np.clip(sol.primal, nb.lo, nb.hi) * s2
    return FeasibilityDiagnosis(True, bounded, xi)
