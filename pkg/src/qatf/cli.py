"""Command-line interface: fit, simulate, bench, diagnose.

Exit codes: 0 success, 2 usage or data error, 3 non-convergence (the
fit is still written), 4 internal error.  The QATF_LOG environment
variable (error|warn|info|debug) controls verbosity on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .backfit import METHOD_MEAN, METHOD_QUANTILE, BackfitConfig, BackfitSession
from .bench import GridSpec, METHODS, run_bench, write_report_csv
from .core import QatfError, read_dataset_csv, validate_design, write_dataset_csv
from .scenarios import ScenarioSpec, generate
from .solvers import SolverConfig

log = logging.getLogger("qatf")

EXIT_OK = 0
EXIT_DATA = 2
EXIT_NOCONV = 3
EXIT_INTERNAL = 4

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = _LOG_LEVELS.get(os.environ.get("QATF_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--rho-init", type=float, default=1.0, help="initial ADMM penalty (default 1.0)")
    p.add_argument("--max-iters", type=int, default=5000, help="ADMM iteration cap (default 5000)")
    p.add_argument("--tol-abs", type=float, default=1e-7, help="absolute tolerance (default 1e-7)")
    p.add_argument("--tol-rel", type=float, default=1e-6, help="relative tolerance (default 1e-6)")
    p.add_argument("--no-adaptive-rho", action="store_true", help="disable penalty adaptation")


def _solver_config(args) -> SolverConfig:
    return SolverConfig(rho_init=args.rho_init, max_iters=args.max_iters,
                        tol_abs=args.tol_abs, tol_rel=args.tol_rel,
                        adaptive_rho=not args.no_adaptive_rho)


def cmd_fit(args) -> int:
    x, y, _ = read_dataset_csv(args.data)
    if args.order < 1:
        raise QatfError("order must be >= 1 for backfitting")
    design = validate_design(x, rescale=args.rescale)
    method = METHOD_QUANTILE if args.method == "QATF" else METHOD_MEAN
    cfg = BackfitConfig(max_cycles=args.max_cycles, cycle_tol=args.cycle_tol,
                        inner=_solver_config(args), method=method)
    session = BackfitSession(design, y, args.order, args.tau, cfg)
    fit, trace = session.fit(args.lam)
    payload = {
        "intercept": fit.intercept,
        "lambda": fit.lam,
        "tau": fit.tau,
        "order": fit.order,
        "method": args.method,
        "components": [fit.components[:, j].tolist() for j in range(fit.d)],
        "objective": float(trace.objective_per_cycle[-1]),
        "cycles": trace.cycles,
        "converged": bool(trace.converged),
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if args.plot:
        from .report import plot_fit
        plot_fit(fit, design, y, os.path.splitext(args.out)[0] + ".png")
    if not trace.converged:
        log.warning("backfitting did not converge in %d cycles", trace.cycles)
        return EXIT_NOCONV
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = ScenarioSpec(scenario=args.scenario, n=args.n, d=args.d,
                        tau=args.tau, seed=args.seed)
    if args.scenario == 6 and args.d != 1:
        print("warning: d ignored for scenario 6", file=sys.stderr)
    ds = generate(spec)
    # synthetic designs store rows already sorted in every dimension, so
    # the sorted columns matrix is also the raw row-order matrix
    write_dataset_csv(args.out, ds.design.columns, ds.y, ds.f_star)
    sidecar = {
        "scenario": spec.scenario,
        "n": spec.n,
        "d": ds.design.d,
        "tau": spec.tau,
        "seed": spec.seed,
        "a": ds.a.tolist(),
        "b": ds.b.tolist(),
        "row_order": "rows are sorted positions in every dimension; "
                     "position-indexed noise scales and transforms follow row order",
    }
    with open(os.path.splitext(args.out)[0] + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if args.plot:
        from .report import plot_dataset
        plot_dataset(ds.design, ds.y, os.path.splitext(args.out)[0] + ".png",
                     f_star=ds.f_star, title=f"scenario {spec.scenario}, n={spec.n}")
    return EXIT_OK


def cmd_bench(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise QatfError(f"unknown method {m!r}; choose from {sorted(METHODS)}")
    n_list = [int(v) for v in args.n_list.split(",") if v.strip()]
    grid = GridSpec(log10_min=args.grid_min, log10_max=args.grid_max, points=args.grid_points)
    report = run_bench(args.scenario, n_list, args.tau, methods, args.reps, grid,
                       seed=args.seed, d=args.d, threads=args.threads)
    write_report_csv(args.out, report)
    if args.plot:
        from .report import plot_report
        plot_report(report, os.path.splitext(args.out)[0] + ".png")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    from .diagnostics import diagnostic_table

    rows = diagnostic_table(seed=args.seed, lipschitz_samples=args.samples,
                            norm_samples=max(1, args.samples // 10))
    width = max(len(name) for name, *_ in rows)
    ok = True
    for name, value, bound, passed in rows:
        ok &= passed
        print(f"{name:<{width}}  {value: .3e}  (bound {bound: .0e})  "
              f"{'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qatf",
                                 description="Quantile additive trend filtering toolkit")
    ap.add_argument("--version", action="version", version=f"qatf {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit an additive model to a dataset CSV")
    p.add_argument("data", help="input CSV with header x1..xd,y[,f_star]")
    p.add_argument("--tau", type=float, default=0.5, help="quantile level (default 0.5)")
    p.add_argument("--order", type=int, default=2, help="difference order r (default 2)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="penalty (default 1.0)")
    p.add_argument("--method", choices=["QATF", "ATF"], default="QATF",
                   help="quantile or squared loss (default QATF)")
    p.add_argument("--out", default="fit.json", help="output JSON path (default fit.json)")
    p.add_argument("--rescale", action="store_true", help="rescale inputs into (0,1]")
    p.add_argument("--max-cycles", type=int, default=100, help="backfit cycle cap (default 100)")
    p.add_argument("--cycle-tol", type=float, default=1e-4, help="cycle stop tolerance (default 1e-4)")
    p.add_argument("--plot", action="store_true", help="also render a PNG next to --out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="generate a synthetic benchmark dataset")
    p.add_argument("--scenario", type=int, required=True, choices=range(1, 7))
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--d", type=int, default=10, help="input dimensions (default 10)")
    p.add_argument("--tau", type=float, default=0.5, help="quantile level (default 0.5)")
    p.add_argument("--seed", type=int, default=0, help="stream seed (default 0)")
    p.add_argument("--out", default="dataset.csv", help="output CSV (default dataset.csv)")
    p.add_argument("--plot", action="store_true", help="also render a PNG next to --out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="Monte-Carlo benchmark with oracle penalty selection")
    p.add_argument("--scenario", type=int, required=True, choices=range(1, 7))
    p.add_argument("--n-list", default="500", help="comma-separated sample sizes (default 500)")
    p.add_argument("--d", type=int, default=10, help="input dimensions (default 10)")
    p.add_argument("--tau", type=float, default=0.5, help="quantile level (default 0.5)")
    p.add_argument("--methods", default="QATF1",
                   help="comma-separated from QATF1,QATF2,ATF1,ATF2 (default QATF1)")
    p.add_argument("--reps", type=int, default=20, help="Monte-Carlo replicates (default 20)")
    p.add_argument("--grid-min", type=float, default=-7.0, help="log10 grid start (default -7)")
    p.add_argument("--grid-max", type=float, default=5.0, help="log10 grid end (default 5)")
    p.add_argument("--grid-points", type=int, default=50, help="grid size (default 50)")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="replicate worker processes (default: logical cores)")
    p.add_argument("--out", default="report.csv", help="output CSV (default report.csv)")
    p.add_argument("--plot", action="store_true", help="also render a PNG next to --out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("diagnose", help="run the mathematical identity checks")
    p.add_argument("--samples", type=int, default=100_000,
                   help="randomized draws for the Lipschitz sweep (default 100000)")
    p.add_argument("--seed", type=int, default=0, help="seed (default 0)")
    p.set_defaults(func=cmd_diagnose)
    return ap


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (QatfError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
