"""Randomised benchmark harness: scenario generation, metrics, aggregation.

Random streams
--------------
Each trial draws from ``numpy.random.Philox`` (a counter-based generator)
keyed by ``SeedSequence([seed, n, m, trial_index, stream])``; stream 0
generates the scenario and stream 1 drives the Monte-Carlo volume estimate.
Trials are therefore reproducible individually and independent of execution
order.
"""
import csv
import io
import json
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .domgraph import assemble, membership_localization
from .errors import RangeBoundError, SamplingBudgetExceeded
from .inner import inscribed_ellipsoid
from .model import ErrorMode, Kind, MeasurementBatch, Scenario, build_bounds, membership_true
from .outer import outer_box
from .refine import DEFAULT_PROBE_RADIUS, central_estimate, enlarge_bounds

log = logging.getLogger(__name__)

CSV_COLUMNS = ["m", "e(c_b)", "e(x_hat)", "e%(c_b)", "e%(x_hat)", "e_outer", "e_outer%",
               "f%(c_b)", "f%(x_hat)", "t_r", "eta_vol"]
_METRICS = ["e_cb", "e_xhat", "epct_cb", "epct_xhat", "e_outer", "e_outer_pct",
            "in_true_cb", "in_true_xhat", "t_r", "eta_vol"]


@dataclass(frozen=True)
class TrialConfig:
    n: int = 2
    m: int = 3
    error_level: float = 0.02
    trials: int = 100
    seed: int = 0
    anchor_range: float = 1000.0
    target_range: float = 100.0
    outlier_prob: float = 0.0
    outlier_level: float = 0.5
    probe_radius: float = DEFAULT_PROBE_RADIUS
    mc_samples: int = 10_000
    preprocess: bool = None  # defaults to outlier_prob > 0
    basis: str = "ellipsoid"

    def __post_init__(self):
        if not 0 < self.error_level < 1:
            raise ValueError("error_level must lie in (0, 1)")
        if self.m < 2 or self.n < 1:
            raise ValueError("need n >= 1 and m >= 2")
        if self.basis not in ("standard", "ellipsoid"):
            raise ValueError("basis must be 'standard' or 'ellipsoid'")
        if self.preprocess is None:
            object.__setattr__(self, "preprocess", self.outlier_prob > 0)


def trial_rng(cfg, trial_index, stream=0):
    ss = np.random.SeedSequence([cfg.seed, cfg.n, cfg.m, trial_index, stream])
    return np.random.Generator(np.random.Philox(ss))


def gen_scenario(cfg, trial_index):
    """Anchors uniform in [-R, R]^n, target uniform in [-T, T]^n, relative-error ranges.

    In-bound readings are ``(1 + e u_i) d_i`` with u_i uniform in [-1, 1]; with
    probability ``outlier_prob`` a reading is replaced by
    ``(1 + outlier_level u'_i) d_i``.
    """
    rng = trial_rng(cfg, trial_index)
    n, m = cfg.n, cfg.m
    anchors = rng.uniform(-cfg.anchor_range, cfg.anchor_range, size=(m, n))
    x_true = rng.uniform(-cfg.target_range, cfg.target_range, size=n)
    u = rng.uniform(-1.0, 1.0, size=m)
    u_out = rng.uniform(-1.0, 1.0, size=m)
    outlier = rng.uniform(size=m) < cfg.outlier_prob
    rel = np.where(outlier, cfg.outlier_level * u_out, cfg.error_level * u)
    z = (1.0 + rel) * np.linalg.norm(x_true - anchors, axis=1)
    batch = MeasurementBatch(Kind.PLAIN, ErrorMode.RELATIVE, z, -cfg.error_level, cfg.error_level)
    return Scenario(anchors, batch, x_true)


def mc_volume_ratio(sys, bounds, box, n_samples, rng, budget_factor=100):
    """Monte-Carlo estimate of vol(X) / vol(X_true).

    Uniform points of the localization set X are drawn by rejection from the
    outer box; the ratio is (#accepted) / (#accepted that lie in X_true).
    """
    max_prop = budget_factor * n_samples
    accepted, in_true, proposed = 0, 0, 0
    chunk = max(1000, 2 * n_samples)
    while accepted < n_samples and proposed < max_prop:
        k = min(chunk, max_prop - proposed)
        g = rng.uniform(box.lo, box.hi, size=(k, box.lo.size))
        pts = g @ box.basis
        proposed += k
        ok = membership_localization(pts, sys, bounds)
        pts = pts[ok][: n_samples - accepted]
        accepted += len(pts)
        in_true += int(np.sum(membership_true(pts, sys, bounds))) if len(pts) else 0
    if accepted < n_samples:
        if accepted < 1e-4 * proposed:
            raise SamplingBudgetExceeded(
                f"only {accepted} of {proposed} proposals fell in the localization set")
        warnings.warn(f"sampling budget exhausted after {accepted} accepted points", stacklevel=2)
    if in_true == 0:
        warnings.warn("no sample fell in the true feasible set; volume ratio undefined", stacklevel=2)
        return math.nan
    return accepted / in_true


@dataclass
class TrialReport:
    trial: int
    e_cb: float = math.nan
    e_xhat: float = math.nan
    epct_cb: float = math.nan
    epct_xhat: float = math.nan
    e_outer: float = math.nan
    e_outer_pct: float = math.nan
    in_true_cb: int = 0
    in_true_xhat: int = 0
    t_r: float = math.nan
    eta_vol: float = math.nan
    t_pre: float = 0.0
    outliers_detected: bool = False
    contains_true: bool = False
    failure: str = None

    @property
    def ok(self):
        return self.failure is None


def run_trial(cfg, trial_index):
    """Full pipeline on one generated scenario, returning its metrics row."""
    rep = TrialReport(trial_index)
    scen = gen_scenario(cfg, trial_index)
    try:
        bounds = build_bounds(scen.batch)
        sys = assemble(scen)
        if cfg.preprocess:
            t0 = time.perf_counter()
            enl = enlarge_bounds(sys, bounds, cfg.probe_radius)
            rep.t_pre = time.perf_counter() - t0
            rep.outliers_detected = enl.outliers_detected
            bounds = enl.adjusted_bounds
        basis = None
        if cfg.basis == "ellipsoid":
            basis = inscribed_ellipsoid(sys, bounds).axes.T
        box = outer_box(sys, bounds, basis)
        est = central_estimate(box, sys, bounds)
    except RangeBoundError as exc:
        rep.failure = f"{type(exc).__name__}: {exc}"
        return rep
    x = scen.true_location
    cb, xh = box.center, est.point
    A = scen.anchors
    mean_d_cb = np.mean(np.linalg.norm(A - cb, axis=1))
    mean_d_xh = np.mean(np.linalg.norm(A - xh, axis=1))
    rep.e_cb = float(np.linalg.norm(cb - x))
    rep.e_xhat = float(np.linalg.norm(xh - x))
    rep.epct_cb = 100.0 * rep.e_cb / mean_d_cb
    rep.epct_xhat = 100.0 * rep.e_xhat / mean_d_xh
    rep.e_outer = float(np.mean(box.half_widths))
    rep.e_outer_pct = 100.0 * rep.e_outer / mean_d_cb
    rep.in_true_cb = int(est.branch == "center")
    rep.in_true_xhat = int(membership_true(xh, sys, bounds))
    rep.t_r = box.solve_time
    rep.contains_true = bool(box.contains(x, slack=1e-6 * (1 + np.max(np.abs(x)))))
    if cfg.mc_samples > 0:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep.eta_vol = mc_volume_ratio(sys, bounds, box, cfg.mc_samples,
                                              trial_rng(cfg, trial_index, stream=1))
        except SamplingBudgetExceeded:
            rep.eta_vol = math.nan
    return rep


@dataclass
class CellResult:
    config: TrialConfig
    reports: list = field(default_factory=list)

    @property
    def successes(self):
        return [r for r in self.reports if r.ok]

    @property
    def failures(self):
        return len(self.reports) - len(self.successes)

    def means(self):
        ok = self.successes
        if not ok:
            return None
        out = {"m": self.config.m}
        for k in _METRICS:
            vals = np.array([getattr(r, k) for r in ok], dtype=float)
            if k.startswith("in_true"):
                out[k] = 100.0 * float(np.mean(vals))
            else:
                vals = vals[np.isfinite(vals)]
                out[k] = float(np.mean(vals)) if vals.size else math.nan
        return out

    def counts(self):
        ok = self.successes
        return {
            "trials": len(self.reports),
            "succeeded": len(ok),
            "failures": self.failures,
            "in_true_cb": int(sum(r.in_true_cb for r in ok)),
            "in_true_xhat": int(sum(r.in_true_xhat for r in ok)),
            "contains_true": int(sum(r.contains_true for r in ok)),
            "outliers_detected": int(sum(r.outliers_detected for r in ok)),
            "failure_messages": [r.failure for r in self.reports if not r.ok],
        }


def _run_trial_args(args):
    return run_trial(*args)


def run_batch(cfg, n_jobs=1, progress=None):
    """Run ``cfg.trials`` independent trials of one (n, m) cell."""
    args = [(cfg, i) for i in range(cfg.trials)]
    if n_jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(n_jobs) as pool:
            reports = list(pool.map(_run_trial_args, args, chunksize=4))
    else:
        reports = []
        for a in args:
            reports.append(run_trial(*a))
            if progress:
                progress(reports[-1])
    reports.sort(key=lambda r: r.trial)
    failed = sum(not r.ok for r in reports)
    if failed:
        log.warning("cell n=%d m=%d: %d of %d trials failed", cfg.n, cfg.m, failed, len(reports))
    return CellResult(cfg, reports)


TABLES = {
    1: dict(n=2, error_level=0.02),
    2: dict(n=3, error_level=0.02),
    3: dict(n=2, error_level=0.1),
    4: dict(n=3, error_level=0.1),
    5: dict(n=2, error_level=0.2),
    6: dict(n=3, error_level=0.2),
    7: dict(n=2, error_level=0.02, outlier_prob=0.1, preprocess=True),
}


def table_configs(table, trials=100, seed=0, m_max=10, **overrides):
    """Per-cell configs for one of the seven benchmark presets."""
    base = dict(TABLES[table])
    base.update(overrides)
    n = base["n"]
    return [TrialConfig(m=m, trials=trials, seed=seed, **base) for m in range(n + 1, m_max + 1)]


def run_cells(configs, n_jobs=1):
    return [run_batch(cfg, n_jobs=n_jobs) for cfg in configs]


def to_csv(cells):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for cell in cells:
        mu = cell.means()
        if mu is None:
            continue
        w.writerow([mu["m"]] + [f"{mu[k]:.2f}" for k in _METRICS])
    return buf.getvalue()


def to_sidecar(cells):
    def clean(v):
        return None if isinstance(v, float) and not math.isfinite(v) else v

    doc = {"schema": "rangebound/1", "cells": []}
    for cell in cells:
        mu = cell.means()
        doc["cells"].append({
            "config": asdict(cell.config),
            "means": None if mu is None else {k: clean(v) for k, v in mu.items()},
            "counts": cell.counts(),
            "trials": [{k: clean(v) for k, v in asdict(r).items()} for r in cell.reports],
        })
    return json.dumps(doc, indent=2)

