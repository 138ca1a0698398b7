"""A small builder for linear / second-order-cone / semidefinite programs.

A :class:`ConeProgram` is a linear objective over a real vector ``v`` plus an
ordered list of constraint blocks:

* linear equalities ``A v = b``
* linear inequalities ``G v <= h``
* second-order cones ``||F v + g||_2 <= f.v + h``
* PSD cones ``C0 + sum_j v_j C_j >= 0`` (symmetric k x k matrices)

Programs are handed to a backend.  ``"clarabel"`` (default) and
``"cvxopt"`` are both primal-dual interior-point solvers that handle all
three cone families natively, so either can cross-check the other.

``ConeProgram.to_cbf`` writes the program in the Conic Benchmark Format
(CBF, version 3) for offline inspection with other solvers.  The mapping is:
``L=`` rows for equalities, ``L+`` rows for inequalities, ``Q`` rows
``(f.v + h, F v + g)`` for second-order cones, and one ``PSDCON`` entry per
PSD block with its lower-triangle coefficients in ``HCOORD``/``DCOORD``.
"""
import enum
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import ArgumentError

SQRT2 = np.sqrt(2.0)


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class Tolerances:
    feas: float = 1e-8
    gap: float = 1e-8
    max_iter: int = 200
    # accepted residual, relative to the block's data scale, when the backend
    # stops at reduced accuracy
    verify: float = 1e-6


DEFAULT_TOLERANCES = Tolerances()


@dataclass
class Solution:
    status: Status
    primal: np.ndarray = None
    objective_value: float = np.nan
    dual_objective: float = np.nan
    solve_time: float = 0.0
    iterations: int = 0
    max_violation: float = np.nan
    backend_status: str = ""

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL


class Layout:
    """Named positions in the decision vector.

    An ``int`` size of 1 names a scalar; a 1-tuple ``(k,)`` names a block.

    >>> L = Layout(c=(2,), r=1)
    >>> L.size, L["c"], L["r"]
    (3, slice(0, 2, None), 2)
    """

    def __init__(self, **sizes):
        self._idx = {}
        pos = 0
        for name, k in sizes.items():
            if isinstance(k, tuple):
                self._idx[name] = slice(pos, pos + k[0])
                pos += k[0]
            else:
                if k != 1:
                    raise ArgumentError("scalar entries have size 1; use (k,) for blocks")
                self._idx[name] = pos
                pos += 1
        self.size = pos

    def __getitem__(self, name):
        return self._idx[name]

    def zeros(self):
        return np.zeros(self.size)

    def unpack(self, v):
        return {name: v[idx] for name, idx in self._idx.items()}


@dataclass
class _Soc:
    F: np.ndarray
    g: np.ndarray
    f: np.ndarray
    h: float


@dataclass
class _Psd:
    C0: np.ndarray
    C: np.ndarray  # k x k x num_vars


@dataclass
class ConeProgram:
    num_vars: int
    objective: np.ndarray
    sense: str = "min"
    eqs: list = field(default_factory=list)
    les: list = field(default_factory=list)
    socs: list = field(default_factory=list)
    psds: list = field(default_factory=list)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(self.num_vars)
        if self.sense not in ("min", "max"):
            raise ArgumentError("sense must be 'min' or 'max'")

    def _mat(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[1] != self.num_vars:
            raise ArgumentError(f"block has {A.shape[1]} columns, program has {self.num_vars} variables")
        return A

    def add_eq(self, A, b):
        A = self._mat(A)
        self.eqs.append((A, np.asarray(b, dtype=float).reshape(A.shape[0])))
        return self

    def add_le(self, G, h):
        G = self._mat(G)
        self.les.append((G, np.asarray(h, dtype=float).reshape(G.shape[0])))
        return self

    def add_soc(self, F, g, f, h):
        """Add ``||F v + g|| <= f.v + h``."""
        F = self._mat(F)
        f = np.asarray(f, dtype=float).reshape(self.num_vars)
        g = np.asarray(g, dtype=float).reshape(F.shape[0])
        self.socs.append(_Soc(F, g, f, float(h)))
        return self

    def add_psd(self, C0, C):
        """Add ``C0 + sum_j v_j C[:, :, j] >= 0``; every slice must be symmetric."""
        C0 = np.asarray(C0, dtype=float)
        C = np.asarray(C, dtype=float)
        k = C0.shape[0]
        if C0.shape != (k, k) or C.shape != (k, k, self.num_vars):
            raise ArgumentError("PSD block shapes are inconsistent")
        if not (np.allclose(C0, C0.T) and np.allclose(C, C.transpose(1, 0, 2))):
            raise ArgumentError("PSD block coefficients must be symmetric")
        self.psds.append(_Psd(C0, C))
        return self

    def violation(self, v):
        """Largest constraint violation of ``v``, each block scaled by its data size."""
        worst = 0.0
        for A, b in self.eqs:
            worst = max(worst, np.max(np.abs(A @ v - b)) / (1 + np.max(np.abs(b))))
        for G, h in self.les:
            worst = max(worst, np.max(G @ v - h) / (1 + np.max(np.abs(h))))
        for s in self.socs:
            lhs = np.linalg.norm(s.F @ v + s.g)
            worst = max(worst, (lhs - (s.f @ v + s.h)) / (1 + abs(s.h) + np.linalg.norm(s.g)))
        for p in self.psds:
            M = p.C0 + p.C @ v
            lam = np.linalg.eigvalsh(0.5 * (M + M.T))[0]
            worst = max(worst, -lam / (1 + np.max(np.abs(p.C0))))
        return float(worst)

    def value(self, v):
        return float(self.objective @ v)

    def solve(self, tol=None, backend="auto"):
        """Solve with one backend, or with ``"auto"``: Clarabel, then CVXOPT on numerical failure."""
        tol = DEFAULT_TOLERANCES if tol is None else tol
        if backend == "auto":
            sol = _solve_clarabel(self, tol)
            if sol.status is Status.NUMERICAL_FAILURE:
                retry = _solve_cvxopt(self, tol)
                if retry.status is not Status.NUMERICAL_FAILURE:
                    return retry
            return sol
        try:
            run = _BACKENDS[backend]
        except KeyError:
            raise ArgumentError(f"unknown backend {backend!r}") from None
        return run(self, tol)

    def to_cbf(self):
        return _to_cbf(self)


def _svec_upper(M):
    """Clarabel's scaled upper-triangle, column-major vectorisation."""
    k = M.shape[0]
    iu, ju = np.triu_indices(k)
    order = np.lexsort((iu, ju))
    iu, ju = iu[order], ju[order]
    scale = np.where(iu == ju, 1.0, SQRT2)
    return M[iu, ju, ...] * (scale if M.ndim == 2 else scale[:, None])


def _finish(prog, tol, status, v, dual_obj, t, iters, raw, reduced_ok=False):
    if status is Status.OPTIMAL or reduced_ok:
        viol = prog.violation(v)
        if status is not Status.OPTIMAL and viol > tol.verify:
            return Solution(Status.NUMERICAL_FAILURE, solve_time=t, iterations=iters,
                            max_violation=viol, backend_status=raw)
        return Solution(Status.OPTIMAL, np.asarray(v, dtype=float), prog.value(v), dual_obj,
                        t, iters, viol, raw)
    return Solution(status, solve_time=t, iterations=iters, backend_status=raw)


def _solve_clarabel(prog, tol):
    import clarabel

    n = prog.num_vars
    rows, rhs, cones = [], [], []
    for A, b in prog.eqs:
        rows.append(A)
        rhs.append(b)
        cones.append(clarabel.ZeroConeT(A.shape[0]))
    for G, h in prog.les:
        rows.append(G)
        rhs.append(h)
        cones.append(clarabel.NonnegativeConeT(G.shape[0]))
    for s in prog.socs:
        rows.append(np.vstack([-s.f[None, :], -s.F]))
        rhs.append(np.concatenate([[s.h], s.g]))
        cones.append(clarabel.SecondOrderConeT(s.F.shape[0] + 1))
    for p in prog.psds:
        rows.append(-_svec_upper(p.C))
        rhs.append(_svec_upper(p.C0))
        cones.append(clarabel.PSDTriangleConeT(p.C0.shape[0]))
    if rows:
        A = sparse.csc_matrix(np.vstack(rows))
        b = np.concatenate(rhs)
    else:
        A = sparse.csc_matrix((0, n))
        b = np.zeros(0)
    sign = 1.0 if prog.sense == "min" else -1.0
    q = sign * prog.objective

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_feas = tol.feas
    settings.tol_gap_abs = tol.gap
    settings.tol_gap_rel = tol.gap
    settings.max_iter = tol.max_iter
    settings.presolve_enable = False
    t0 = time.perf_counter()
    solver = clarabel.DefaultSolver(sparse.csc_matrix((n, n)), q, A, b, cones, settings)
    sol = solver.solve()
    elapsed = time.perf_counter() - t0

    raw = str(sol.status)
    S = clarabel.SolverStatus
    v = np.array(sol.x, dtype=float)
    dual = sign * sol.obj_val_dual
    if sol.status == S.Solved:
        return _finish(prog, tol, Status.OPTIMAL, v, dual, elapsed, sol.iterations, raw)
    if sol.status in (S.PrimalInfeasible, S.AlmostPrimalInfeasible):
        return _finish(prog, tol, Status.INFEASIBLE, v, dual, elapsed, sol.iterations, raw)
    if sol.status in (S.DualInfeasible, S.AlmostDualInfeasible):
        return _finish(prog, tol, Status.UNBOUNDED, v, dual, elapsed, sol.iterations, raw)
    reduced = sol.status in (S.AlmostSolved, S.InsufficientProgress, S.MaxIterations)
    return _finish(prog, tol, Status.NUMERICAL_FAILURE, v, dual, elapsed, sol.iterations, raw,
                   reduced_ok=reduced and np.all(np.isfinite(v)))


def _solve_cvxopt(prog, tol):
    import cvxopt
    from cvxopt import solvers

    n = prog.num_vars
    Gs, hs = [], []
    dims = {"l": 0, "q": [], "s": []}
    for G, h in prog.les:
        Gs.append(G)
        hs.append(h)
        dims["l"] += G.shape[0]
    for s in prog.socs:
        Gs.append(np.vstack([-s.f[None, :], -s.F]))
        hs.append(np.concatenate([[s.h], s.g]))
        dims["q"].append(s.F.shape[0] + 1)
    for p in prog.psds:
        k = p.C0.shape[0]
        Gs.append(-p.C.transpose(1, 0, 2).reshape(k * k, n))
        hs.append(p.C0.T.reshape(k * k))
        dims["s"].append(k)
    G = cvxopt.matrix(np.vstack(Gs)) if Gs else cvxopt.matrix(np.zeros((0, n)))
    h = cvxopt.matrix(np.concatenate(hs)) if hs else cvxopt.matrix(np.zeros(0))
    kw = {}
    if prog.eqs:
        kw["A"] = cvxopt.matrix(np.vstack([A for A, _ in prog.eqs]))
        kw["b"] = cvxopt.matrix(np.concatenate([b for _, b in prog.eqs]))
    sign = 1.0 if prog.sense == "min" else -1.0
    c = cvxopt.matrix(sign * prog.objective)
    opts = {"show_progress": False, "abstol": tol.gap, "reltol": tol.gap,
            "feastol": tol.feas, "maxiters": tol.max_iter}
    t0 = time.perf_counter()
    try:
        res = solvers.conelp(c, G, h, dims, options=opts, **kw)
    except (ArithmeticError, ValueError) as exc:
        return Solution(Status.NUMERICAL_FAILURE, solve_time=time.perf_counter() - t0,
                        backend_status=f"error: {exc}")
    elapsed = time.perf_counter() - t0
    raw = res["status"]
    iters = int(res.get("iterations", 0))
    if raw == "primal infeasible":
        return _finish(prog, tol, Status.INFEASIBLE, None, np.nan, elapsed, iters, raw)
    if raw == "dual infeasible":
        return _finish(prog, tol, Status.UNBOUNDED, None, np.nan, elapsed, iters, raw)
    v = np.array(res["x"], dtype=float).ravel()
    dual = sign * float(res["dual objective"]) if res["dual objective"] is not None else np.nan
    if raw == "optimal":
        return _finish(prog, tol, Status.OPTIMAL, v, dual, elapsed, iters, raw)
    return _finish(prog, tol, Status.NUMERICAL_FAILURE, v, dual, elapsed, iters, raw,
                   reduced_ok=np.all(np.isfinite(v)))


_BACKENDS = {"clarabel": _solve_clarabel, "cvxopt": _solve_cvxopt}


def _fmt(x):
    return repr(float(x))


def _to_cbf(prog):
    n = prog.num_vars
    lines = ["VER", "3", "", "OBJSENSE", "MIN" if prog.sense == "min" else "MAX", "",
             "VAR", f"{n} 1", f"F {n}", ""]
    groups, A_rows, b_rows = [], [], []
    for A, b in prog.eqs:
        groups.append(("L=", A.shape[0]))
        A_rows.append(A)
        b_rows.append(-b)
    for G, h in prog.les:
        groups.append(("L+", G.shape[0]))
        A_rows.append(-G)
        b_rows.append(h)
    for s in prog.socs:
        groups.append(("Q", s.F.shape[0] + 1))
        A_rows.append(np.vstack([s.f[None, :], s.F]))
        b_rows.append(np.concatenate([[s.h], s.g]))
    if groups:
        A = np.vstack(A_rows)
        b = np.concatenate(b_rows)
        lines += ["CON", f"{A.shape[0]} {len(groups)}"]
        lines += [f"{name} {k}" for name, k in groups] + [""]
    if prog.psds:
        lines += ["PSDCON", str(len(prog.psds))]
        lines += [str(p.C0.shape[0]) for p in prog.psds] + [""]
    obj = [(j, c) for j, c in enumerate(prog.objective) if c != 0]
    if obj:
        lines += ["OBJACOORD", str(len(obj))] + [f"{j} {_fmt(c)}" for j, c in obj] + [""]
    if groups:
        ii, jj = np.nonzero(A)
        lines += ["ACOORD", str(ii.size)]
        lines += [f"{i} {j} {_fmt(A[i, j])}" for i, j in zip(ii, jj)] + [""]
        nz = np.flatnonzero(b)
        lines += ["BCOORD", str(nz.size)] + [f"{i} {_fmt(b[i])}" for i in nz] + [""]
    if prog.psds:
        h_entries, d_entries = [], []
        for idx, p in enumerate(prog.psds):
            k = p.C0.shape[0]
            for r in range(k):
                for c in range(r + 1):
                    for j in np.flatnonzero(p.C[r, c]):
                        h_entries.append(f"{idx} {j} {r} {c} {_fmt(p.C[r, c, j])}")
                    if p.C0[r, c] != 0:
                        d_entries.append(f"{idx} {r} {c} {_fmt(p.C0[r, c])}")
        lines += ["HCOORD", str(len(h_entries))] + h_entries + [""]
        lines += ["DCOORD", str(len(d_entries))] + d_entries + [""]
    return "\n".join(lines)
