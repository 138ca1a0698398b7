"""``rangebound`` command line: localize, bench, plot.

Exit codes: 0 ok, 2 invalid input, 3 empty localization set, 4 solver
failure, 5 containment check failed under ``--seed-verify``.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import TABLES, TrialConfig, run_cells, table_configs, to_csv, to_sidecar
from .conic import Tolerances
from .domgraph import membership_localization
from .errors import ArgumentError, DimensionUnsupported, EmptyLocalizationSet, RangeBoundError, SolverFailure
from .model import BoundsVector, Scenario, membership_balls
from .pipeline import LocalizeOptions, localize

EXIT_OK, EXIT_INPUT, EXIT_EMPTY, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4, 5
VERIFY_SLACK = 1e-6

log = logging.getLogger("rangebound")


def _read_json(path):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArgumentError(f"cannot read {path}: {exc}") from exc


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _direction(text):
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad direction {text!r}; expected e.g. '1,0'") from None


def _verify(scen, res):
    """Names of the certified sets that fail to contain the true location."""
    x = scen.true_location
    if x is None:
        raise ArgumentError("--seed-verify needs true_location in the scenario")
    tol = VERIFY_SLACK * (1 + np.max(np.abs(res.bounds.hi)))
    bad = []
    if not membership_localization(x, res.system, res.bounds, tol=tol):
        bad.append("localization set")
    if not membership_balls(x, res.system, res.bounds, tol=tol):
        bad.append("outer balls")
    if not res.box.contains(x, slack=VERIFY_SLACK * (1 + np.max(np.abs(x)))):
        bad.append("box")
    if res.outer_ellipsoid is not None and not res.outer_ellipsoid.contains(x, slack=VERIFY_SLACK):
        bad.append("outer ellipsoid")
    return bad


def cmd_localize(args):
    scen = Scenario.from_dict(_read_json(args.scenario))
    tol = Tolerances(feas=args.feas_tol, gap=args.gap_tol, max_iter=args.max_iter, verify=args.verify_tol)
    opts = LocalizeOptions(preprocess=args.preprocess, probe_radius=args.probe_radius,
                           basis=args.basis, outer_ellipsoid=args.outer_ellipsoid,
                           directional=args.directional, vertex_cap=args.vertex_cap, tol=tol)
    res = localize(scen, opts)
    doc = res.to_document()
    _write(json.dumps(doc, indent=2) + "\n", args.out)
    if args.seed_verify:
        bad = _verify(scen, res)
        if bad:
            log.error("containment violated: true location outside %s", ", ".join(bad))
            return EXIT_VERIFY
    return EXIT_OK


def cmd_bench(args):
    overrides = {}
    if args.config:
        overrides.update(_read_json(args.config))
    for key in ("n", "error_level", "outlier_prob", "mc_samples", "probe_radius"):
        v = getattr(args, key)
        if v is not None:
            overrides[key] = v
    trials = overrides.pop("trials", args.trials)
    seed = overrides.pop("seed", args.seed)
    try:
        if args.table is not None:
            cfgs = table_configs(args.table, trials=trials, seed=seed, m_max=args.m_max, **overrides)
        elif "n" in overrides:
            n = overrides["n"]
            cfgs = [TrialConfig(m=m, trials=trials, seed=seed, **overrides)
                    for m in range(n + 1, args.m_max + 1)]
        else:
            raise ArgumentError("give --table, --n or a --config with n")
    except (TypeError, ValueError) as exc:
        raise ArgumentError(str(exc)) from exc

    cells = []
    for cfg in cfgs:
        cells += run_cells([cfg], n_jobs=args.n_jobs)
        log.info("m=%d done (%d failures)", cfg.m, cells[-1].failures)
    _write(to_csv(cells), args.out)
    if args.out not in (None, "-"):
        Path(args.out).with_suffix(".json").write_text(to_sidecar(cells) + "\n")
    return EXIT_OK


def cmd_plot(args):
    from .plot import render_svg

    scen = Scenario.from_dict(_read_json(args.scenario))
    doc = _read_json(args.result)
    try:
        bounds = BoundsVector(doc["bounds"]["lo"], doc["bounds"]["hi"])
    except (KeyError, TypeError) as exc:
        raise ArgumentError(f"result document lacks bounds: {exc}") from exc
    Path(args.out).write_text(render_svg(scen, bounds, doc))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="rangebound", description="Set-membership range localization")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    loc = sub.add_parser("localize", help="localize one scenario file")
    loc.add_argument("scenario", help="scenario JSON ('-' for stdin)")
    loc.add_argument("-o", "--out", help="result JSON path (default stdout)")
    loc.add_argument("--preprocess", action="store_true", help="repair inconsistent bounds first")
    loc.add_argument("--probe-radius", type=float, default=0.01)
    loc.add_argument("--basis", choices=("standard", "ellipsoid"), default="ellipsoid")
    loc.add_argument("--outer-ellipsoid", action="store_true")
    loc.add_argument("--vertex-cap", type=int, default=12)
    loc.add_argument("--directional", type=_direction, metavar="VX,VY[,VZ]")
    loc.add_argument("--seed-verify", action="store_true",
                     help="check the certified sets contain true_location (exit 5 if not)")
    loc.add_argument("--feas-tol", type=float, default=1e-8)
    loc.add_argument("--gap-tol", type=float, default=1e-8)
    loc.add_argument("--max-iter", type=int, default=200)
    loc.add_argument("--verify-tol", type=float, default=1e-6)
    loc.set_defaults(func=cmd_localize)

    b = sub.add_parser("bench", help="run the randomized benchmark")
    b.add_argument("--table", type=int, choices=sorted(TABLES))
    b.add_argument("--config", help="JSON file with TrialConfig fields")
    b.add_argument("--n", type=int)
    b.add_argument("--error-level", type=float)
    b.add_argument("--outlier-prob", type=float)
    b.add_argument("--probe-radius", type=float)
    b.add_argument("--mc-samples", type=int)
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--m-max", type=int, default=10)
    b.add_argument("--n-jobs", type=int, default=1)
    b.add_argument("-o", "--out", help="CSV path; a .json sidecar is written next to it")
    b.set_defaults(func=cmd_bench)

    pl = sub.add_parser("plot", help="render a 2-D result as SVG")
    pl.add_argument("scenario")
    pl.add_argument("result")
    pl.add_argument("out")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="rangebound: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except EmptyLocalizationSet as exc:
        log.error("[%s] empty localization set: %s", getattr(exc, "stage", "?"), exc)
        return EXIT_EMPTY
    except SolverFailure as exc:
        log.error("[%s] solver failure: %s", getattr(exc, "stage", "?"), exc)
        return EXIT_SOLVER
    except (ArgumentError, DimensionUnsupported, ValueError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INPUT
    except RangeBoundError as exc:
        log.error("[%s] %s: %s", getattr(exc, "stage", "?"), type(exc).__name__, exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
