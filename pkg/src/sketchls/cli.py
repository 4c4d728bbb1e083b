"""Command-line entry point: ``sketchls {theory,simulate,empirical,bench,plot}``.

Every option may also come from a flat ``key = value`` file passed with
``--config``; explicit command-line flags win over file values.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import break_even_r, fit_cost_model, time_solve, write_timing_csv
from .errors import InfeasibleError, SketchError
from .eta import DiscreteDistribution
from .experiments import (
    EllipticalSource,
    ExperimentGrid,
    GaussianSource,
    _theory_dims,
    default_r_sweep,
    parse_config,
    read_results_csv,
    run_empirical,
    run_grid,
    theory_for,
    write_manifest,
    write_results_csv,
)
from .plot import PlotStyle, emit_plot
from .regression import SCALE_CONVENTIONS, EllipticalSpec, generate_gaussian_design, heavy_tailed_spec
from .sketch import canonical_method
from .theory import GREEDY_ARG_CONVENTIONS

DEFAULT_METHODS = "gaussian,iid_rademacher,haar,srht,uniform_sample"


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v for v in str(text).replace(" ", "").split(",") if v)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def _common(sp: argparse.ArgumentParser, grid: bool = True) -> None:
    sp.add_argument("--config", help="flat key = value file with defaults")
    sp.add_argument("--out", help="output path")
    if grid:
        sp.add_argument("--n", type=int, default=2048)
        sp.add_argument("--p", type=int, default=102)
        sp.add_argument("--r-list", type=_int_list, default=None,
                        help="comma-separated sketch sizes (default: geometric sweep)")
        sp.add_argument("--methods", type=_str_list, default=_str_list(DEFAULT_METHODS))
        sp.add_argument("--metric", choices=("ve", "pe", "re", "oe", "all"), default="all")


def _data_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--data", choices=("gaussian", "two-point", "t"), default="gaussian",
                    help="design family: Gaussian, two-point elliptical scales, or correlated t_1")
    sp.add_argument("--scale-atoms", type=_float_list, default=(1.0, 9.0),
                    help="squared-scale atoms of the two-point law (equal weights)")
    sp.add_argument("--scale-convention", choices=SCALE_CONVENTIONS, default="sqrt",
                    help="chi-square divisor convention for --data t")
    sp.add_argument("--greedy-arg-convention", choices=GREEDY_ARG_CONVENTIONS, default="gamma-over-xi")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sketchls", description="Efficiency of sketched least squares.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    th = sub.add_parser("theory", help="print predicted efficiencies")
    _common(th)
    _data_flags(th)

    sim = sub.add_parser("simulate", help="Monte-Carlo grid joined with predictions")
    _common(sim)
    _data_flags(sim)
    sim.add_argument("--reps", type=int, default=10)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--redraw-data", action="store_true", help="draw a fresh X per replicate")
    sim.add_argument("--workers", type=int, default=1)

    emp = sub.add_parser("empirical", help="sketch a standardized CSV dataset")
    _common(emp, grid=False)
    emp.add_argument("--csv", required=False, help="input CSV with a header row")
    emp.add_argument("--response", default="0", help="response column name or index")
    emp.add_argument("--r-list", type=_int_list, required=False)
    emp.add_argument("--methods", type=_str_list, default=_str_list("gaussian,srht,uniform_sample"))
    emp.add_argument("--metric", choices=("re", "oe", "all"), default="all")
    emp.add_argument("--reps", type=int, default=10)
    emp.add_argument("--seed", type=int, default=0)

    be = sub.add_parser("bench", help="time full OLS against SRHT sketch-and-solve")
    _common(be, grid=False)
    be.add_argument("--n", type=int, default=16384)
    be.add_argument("--p", type=int, default=512)
    be.add_argument("--r-list", type=_int_list, default=None, help="default: n/8 and n/4")
    be.add_argument("--reps", type=int, default=5)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--budget", type=_float_list, default=(0.25, 0.5, 1.0),
                    help="fractions c of the full-OLS time for break-even r")

    pl = sub.add_parser("plot", help="render a results CSV to SVG")
    _common(pl, grid=False)
    pl.add_argument("--in", dest="input", required=False, help="results CSV")
    pl.add_argument("--metric", choices=("ve", "pe", "re", "oe"), default="ve")
    pl.add_argument("--methods", type=_str_list, default=None)
    pl.add_argument("--log-y", action="store_true")
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Parse twice: once to find ``--config``, then with file values as defaults."""
    args = ap.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    values = parse_config(args.config)
    sub = ap._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    known = {a.dest: a for a in sub._actions}  # noqa: SLF001
    defaults = {}
    for key, raw in values.items():
        if key not in known:
            raise SystemExit(f"{args.config}: unknown option {key!r} for {args.command}")
        action = known[key]
        if action.type is not None:
            defaults[key] = action.type(raw)
        elif isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = raw
    sub.set_defaults(**defaults)
    return ap.parse_args(argv)


def _source(args, p: int):
    if args.data == "gaussian":
        return GaussianSource()
    if args.data == "two-point":
        return EllipticalSource(EllipticalSpec(DiscreteDistribution(args.scale_atoms)))
    return EllipticalSource(heavy_tailed_spec(p, args.scale_convention))


def _metrics(choice: str, allowed=("ve", "pe", "re", "oe")):
    return allowed if choice == "all" else (choice,)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise SystemExit("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def cmd_theory(args) -> int:
    r_values = args.r_list or default_r_sweep(args.n, args.p)
    source = _source(args, args.p)
    law = None
    if isinstance(source, GaussianSource):
        law = DiscreteDistribution.point_mass(1.0)
    elif isinstance(source.spec.scale_law, DiscreteDistribution):
        law = source.spec.scale_law
    metrics = _metrics(args.metric)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("method", "n", "p", "r", "gamma", "xi", *metrics, "note"))
        for method in (canonical_method(m) for m in args.methods):
            for r in r_values:
                tn, tp_, tr, _ = _theory_dims(method, args.n, args.p, r)
                try:
                    rep, note = theory_for(method, args.n, args.p, r, law, args.greedy_arg_convention,
                                           isinstance(source, EllipticalSource))
                except (InfeasibleError, ValueError) as exc:
                    rep, note = None, str(exc)
                vals = [""] * len(metrics) if rep is None else [repr(float(rep.as_dict()[m])) for m in metrics]
                w.writerow((method, args.n, args.p, r, repr(tp_ / tn), repr(tr / tn), *vals, note))
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _manifest_path(out: str) -> Path:
    return Path(out).with_suffix(".manifest.txt")


def cmd_simulate(args) -> int:
    _require(args, "out")
    r_values = args.r_list or default_r_sweep(args.n, args.p)
    grid = ExperimentGrid(
        args.n, args.p, r_values, args.methods, args.reps, args.seed, _source(args, args.p),
        _metrics(args.metric), args.redraw_data, args.greedy_arg_convention, args.workers,
    )
    rows = run_grid(grid)
    write_results_csv(rows, args.out)
    config = {
        "command": "simulate", "n": args.n, "p": args.p, "r_list": ",".join(map(str, grid.r_values)),
        "methods": ",".join(grid.methods), "reps": args.reps, "metric": args.metric, "data": args.data,
        "scale_atoms": ",".join(map(repr, args.scale_atoms)), "scale_convention": args.scale_convention,
        "greedy_arg_convention": args.greedy_arg_convention, "redraw_data": args.redraw_data,
    }
    write_manifest(_manifest_path(args.out), config, args.seed)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_empirical(args) -> int:
    _require(args, "csv", "r_list", "out")
    response = int(args.response) if str(args.response).lstrip("-").isdigit() else args.response
    rows = run_empirical(args.csv, response, args.methods, args.r_list, args.reps, args.seed,
                         _metrics(args.metric, ("re", "oe")))
    write_results_csv(rows, args.out)
    config = {
        "command": "empirical", "csv": args.csv, "response": args.response,
        "r_list": ",".join(map(str, args.r_list)), "methods": ",".join(args.methods),
        "reps": args.reps, "metric": args.metric,
    }
    write_manifest(_manifest_path(args.out), config, args.seed)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_bench(args) -> int:
    r_values = args.r_list or (args.n // 8, args.n // 4)
    x = generate_gaussian_design(args.n, args.p, seed=args.seed)
    y = np.random.default_rng(args.seed).standard_normal(args.n)
    records = [time_solve(x, y, "full", reps=args.reps, seed=args.seed)]
    records += [time_solve(x, y, "srht", r, reps=args.reps, seed=args.seed) for r in r_values]
    for rec in records:
        print(f"{rec.method:6s} n={rec.n} p={rec.p} r={rec.r} median={rec.median_seconds:.4g}s iqr={rec.iqr_seconds:.3g}s")
    if args.out:
        write_timing_csv(records, args.out)
    try:
        model = fit_cost_model(records)
    except InfeasibleError as exc:
        print(f"cost model not fitted: {exc}")
        return 0
    print(f"cost model: a_full={model.a_full:.3g} a_fwht={model.a_fwht:.3g} a_solve={model.a_solve:.3g}")
    for c in args.budget:
        try:
            print(f"break-even r at c={c:g}: {break_even_r(model, args.n, args.p, c):.1f}")
        except InfeasibleError as exc:
            print(f"break-even r at c={c:g}: infeasible ({exc})")
    return 0


def cmd_plot(args) -> int:
    _require(args, "input", "out")
    rows = [r for r in read_results_csv(args.input) if r.metric == args.metric]
    if args.methods:
        keep = {canonical_method(m) for m in args.methods}
        rows = [r for r in rows if r.method in keep]
    emit_plot(rows, args.out, PlotStyle(log_y=args.log_y))
    print(f"wrote {args.out}")
    return 0


COMMANDS = {"theory": cmd_theory, "simulate": cmd_simulate, "empirical": cmd_empirical,
            "bench": cmd_bench, "plot": cmd_plot}


def main(argv=None) -> int:
    ap = build_parser()
    args = _apply_config(ap, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SketchError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
