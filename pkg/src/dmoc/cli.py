"""Command-line frontend: ``dmoc compute|align|trivial-bound|convergence-study|oracle``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from dmoc import io
from dmoc.alignment import compare
from dmoc.core import DEFAULT_K, DmocCurve, compute_dmoc, default_grid, explicit_grid, make_grid
from dmoc.lipschitz_bounds import ConvergenceError, WeightStack, layer_norms
from dmoc.metric_space import DataSet, GeometrySummary, Metric, geometry
from dmoc.minibatch import BatchPlan, compute_dmoc_minibatch, convergence_study
from dmoc.seminorms import (
    IDENTITY,
    SeminormResult,
    curve_seminorm,
    discrete_seminorm,
    minibatch_seminorm,
    parse_rho,
)

log = logging.getLogger("dmoc")

THREADS_ENV = "DMOC_NUM_THREADS"


class UsageError(Exception):
    """A rejected precondition; reported on stderr with exit status 2."""


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    return int(env) if env else None


def load_dataset(args) -> DataSet:
    if bool(args.data) == bool(args.x):
        raise UsageError("give either --data with --y-cols, or both --x and --y")
    if args.data:
        if not args.y_cols:
            raise UsageError("--data needs --y-cols")
        table = io.read_matrix(args.data, args.delimiter)
        ycols = io.parse_columns(args.y_cols, table.shape[1])
        xcols = [c for c in range(table.shape[1]) if c not in ycols]
        if not xcols:
            raise UsageError("--y-cols selects every column; no site columns left")
        X, Y = table[:, xcols], table[:, ycols]
    else:
        if not args.y:
            raise UsageError("--x needs --y")
        X = io.read_matrix(args.x, args.delimiter)
        Y = io.read_matrix(args.y, args.delimiter)
        if X.shape[0] != Y.shape[0]:
            raise UsageError(f"row-count mismatch: {args.x} has {X.shape[0]} rows, {args.y} has {Y.shape[0]}")
    return DataSet(X, Y, Metric(args.metric_x), Metric(args.metric_y))


def build_grid(args, ds: DataSet, geom: GeometrySummary | None):
    if args.grid_file:
        return explicit_grid(io.read_matrix(args.grid_file, args.delimiter)[:, 0])
    t_max = args.t_max if args.t_max is not None else args.diameter
    if args.t_min is not None and t_max is not None:
        if args.t_min == t_max:
            return make_grid(args.grid, 1, args.t_min, t_max)
        return make_grid(args.grid, args.K, args.t_min, t_max)
    return default_grid(ds, args.K, args.grid, args.t_min, t_max, geom)


def _need_geometry(args) -> bool:
    # geometry is quadratic; skip it for minibatch runs with a fully specified grid
    explicit = args.grid_file or (args.t_min is not None and (args.t_max or args.diameter) is not None)
    return not (getattr(args, "batch_size", None) and explicit)


def _seminorm_json(res: SeminormResult) -> dict:
    return {
        "value": None if res.unbounded else res.value,
        "unbounded": res.unbounded,
        "argmax_scale": res.argmax_scale,
        "argmax_pair": list(res.argmax_pair) if res.argmax_pair else None,
        "rho": res.rho,
    }


def _geom_json(geom: GeometrySummary | None) -> dict:
    if geom is None:
        return {"q_N": None, "diameter": None}
    return {"q_N": geom.separation, "diameter": geom.diameter}


def _write_svg(path: Path, curves: list[tuple[str, DmocCurve]], every: int, title: str) -> None:
    series = [(name, c.scales[::every], c.omega[::every]) for name, c in curves]
    path.write_text(io.loglog_svg(series, title=title))


def cmd_compute(args) -> int:
    started = time.perf_counter()
    threads = _threads(args)
    rho = parse_rho(args.rho)
    ds = load_dataset(args)
    if ds.n < 2:
        raise UsageError("need at least 2 rows")
    geom = geometry(ds, threads) if _need_geometry(args) else None
    grid = build_grid(args, ds, geom)
    if args.batch_size:
        plan = BatchPlan(args.batch_size, ds.n, args.shuffle_seed)
        curve = compute_dmoc_minibatch(ds, grid, plan, threads, geom)
        lip = minibatch_seminorm(ds, plan, IDENTITY, threads)
        semi = lip if rho is IDENTITY else minibatch_seminorm(ds, plan, rho, threads)
    else:
        curve = compute_dmoc(ds, grid, threads, geom)
        lip = discrete_seminorm(ds, IDENTITY, threads)
        semi = lip if rho is IDENTITY else discrete_seminorm(ds, rho, threads)
    stem = Path(args.out)
    stem.parent.mkdir(parents=True, exist_ok=True)
    formats = set(args.format.split(","))
    summary = {
        "N": ds.n,
        "n1": ds.sites.shape[1],
        "n2": ds.values.shape[1],
        **_geom_json(geom),
        "estimator": curve.estimator,
        "batch_size": curve.batch_size,
        "shuffle_seed": args.shuffle_seed if args.batch_size else None,
        "pair_evaluations": curve.pair_evaluations,
        "grid": {"kind": grid.kind, "K": grid.K, "t_min": grid.scales[0], "t_max": grid.scales[-1]},
        "L_dmoc": _seminorm_json(lip),
        "L_dmoc_grid": curve_seminorm(curve).value,
        "seminorm": _seminorm_json(semi),
        "warnings": list(curve.warnings),
    }
    if args.timing:
        summary["timing_seconds"] = time.perf_counter() - started
    if "csv" in formats:
        io.write_curve(f"{stem}.curve.csv", curve.scales, curve.omega)
    if "json" in formats:
        io.write_json(f"{stem}.summary.json", summary)
    if "svg" in formats:
        _write_svg(Path(f"{stem}.svg"), [(stem.name, curve)], args.subsample, "DMOC")
    log.info("N=%d K=%d L_dmoc=%s", ds.n, grid.K, lip.value)
    return 0


def cmd_align(args) -> int:
    ta, wa = io.read_curve(args.curve_a)
    tb, wb = io.read_curve(args.curve_b)
    if ta.shape != tb.shape:
        raise UsageError(f"grids differ in length: {ta.size} vs {tb.size}")
    diff = np.flatnonzero(ta != tb)
    if diff.size:
        k = int(diff[0])
        raise UsageError(f"grids differ first at row {k}: t={ta[k]!r} vs t={tb[k]!r}")
    rep = compare(wa, wb)
    text = io.dumps(
        {
            "A": rep.relative_alignment,
            "S": rep.score,
            "r": "undefined" if rep.pearson is None else rep.pearson,
            "K": rep.K,
        }
    )
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_trivial_bound(args) -> int:
    mats = [io.read_matrix(p, args.delimiter) for p in args.matrices]
    acts = [float(a) for a in args.activation_lipschitz.split(",")] if args.activation_lipschitz else []
    try:
        stack = WeightStack(mats, acts)
    except ValueError as exc:
        msg = str(exc)
        for k in range(len(mats) - 1):
            if mats[k + 1].shape[1] != mats[k].shape[0]:
                msg = f"{args.matrices[k]} {mats[k].shape} does not chain into {args.matrices[k + 1]} {mats[k + 1].shape}"
                break
        raise UsageError(msg) from exc
    norms = layer_norms(stack, args.tol, args.max_iter)
    product = 1.0
    for norm, act in zip(norms, stack.activation_lipschitz):
        product *= norm * act
    text = io.dumps(
        {
            "layers": [
                {"path": str(p), "shape": list(m.shape), "spectral_norm": n, "activation_lipschitz": a}
                for p, m, n, a in zip(args.matrices, stack.matrices, norms, stack.activation_lipschitz)
            ],
            "product": product,
        }
    )
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_convergence_study(args) -> int:
    threads = _threads(args)
    ds = load_dataset(args)
    sizes = [int(c) for c in args.batch_sizes.split(",")]
    for c in sizes:
        if c > ds.n:
            raise UsageError(f"batch size {c} exceeds N={ds.n}")
    with_exact = ds.n <= args.exact_max_n
    geom = geometry(ds, threads) if (with_exact or _need_geometry(args)) else None
    grid = build_grid(args, ds, geom)
    study = convergence_study(ds, grid, sizes, args.shuffle_seed, with_exact, threads, geom)
    stem = Path(args.out)
    stem.parent.mkdir(parents=True, exist_ok=True)
    per_c = {}
    for c, curve in study.curves.items():
        io.write_curve(f"{stem}.C{c}.curve.csv", curve.scales, curve.omega)
        lip = minibatch_seminorm(ds, BatchPlan(c, ds.n, args.shuffle_seed), IDENTITY, threads)
        per_c[str(c)] = {
            "L_dmoc": _seminorm_json(lip),
            "pair_evaluations": curve.pair_evaluations,
            "max_gap": float(study.gaps[c].max()) if study.gaps else None,
        }
    summary = {
        "N": ds.n,
        **_geom_json(geom),
        "shuffle_seed": args.shuffle_seed,
        "batch_sizes": sizes,
        "grid": {"kind": grid.kind, "K": grid.K, "t_min": grid.scales[0], "t_max": grid.scales[-1]},
        "per_batch_size": per_c,
        "exact": None,
    }
    if study.exact is not None:
        io.write_curve(f"{stem}.exact.curve.csv", study.exact.scales, study.exact.omega)
        io.write_table(
            f"{stem}.gaps.csv",
            ["t"] + [f"gap_C{c}" for c in sizes],
            [grid.scales] + [study.gaps[c] for c in sizes],
        )
        summary["exact"] = {"L_dmoc": _seminorm_json(discrete_seminorm(ds, IDENTITY, threads))}
    io.write_json(f"{stem}.study.json", summary)
    if "svg" in args.format.split(","):
        named = [(f"C={c}", study.curves[c]) for c in sizes]
        if study.exact is not None:
            named.append(("exact", study.exact))
        _write_svg(Path(f"{stem}.svg"), named, args.subsample, "minibatch DMOC")
    return 0


def cmd_oracle(args) -> int:
    from dmoc import oracles

    if args.kind == "net":
        fn = {
            "sqrt": oracles.OracleFunction("sqrt"),
            "power": oracles.OracleFunction.power(args.alpha),
            "log_modulus": oracles.OracleFunction("log_modulus"),
        }[args.function]
        if args.dim != 1:
            raise UsageError("oracle functions on nets are one-dimensional")
        ds = oracles.sample_dataset(fn, oracles.generate_net(1, args.spacing, args.centered))
    elif args.kind == "tanh":
        x = np.sort(np.random.default_rng(args.seed).uniform(-100, 100, args.n_samples))
        ds = oracles.sample_dataset(oracles.OracleFunction.tanh(), x)
    elif args.kind == "classifier":
        ds = oracles.generate_classifier_dataset(
            args.n_classes, args.points_per_class, args.min_cross_distance, args.seed, args.dim
        )
    else:
        if not args.weights:
            raise UsageError("linear oracle needs --weights")
        W = io.read_matrix(args.weights, args.delimiter)
        ds = oracles.generate_linear_dataset(W, args.n_samples, args.seed, args.singular_pair)
    stem = Path(args.out)
    stem.parent.mkdir(parents=True, exist_ok=True)
    io.write_table(f"{stem}.x.csv", [f"x{c}" for c in range(ds.sites.shape[1])], list(ds.sites.T))
    io.write_table(f"{stem}.y.csv", [f"y{c}" for c in range(ds.values.shape[1])], list(ds.values.T))
    return 0


def _add_data_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input")
    g.add_argument("--x", help="CSV of data sites")
    g.add_argument("--y", help="CSV of data values")
    g.add_argument("--data", help="combined CSV; pick value columns with --y-cols")
    g.add_argument("--y-cols", help="value columns, e.g. -1, 3,4 or 2:5 (zero-based)")
    g.add_argument("--delimiter", default=",")
    g.add_argument("--metric-x", default="euclidean", choices=["euclidean", "manhattan"])
    g.add_argument("--metric-y", default="euclidean", choices=["euclidean", "manhattan"])
    g = p.add_argument_group("grid")
    g.add_argument("--grid", default="exponential", choices=["exponential", "linear"])
    g.add_argument("--K", type=int, default=DEFAULT_K)
    g.add_argument("--t-min", type=float, help="default: separation distance")
    g.add_argument("--t-max", type=float, help="default: data diameter")
    g.add_argument("--diameter", type=float, help="known domain diameter, used as t_max")
    g.add_argument("--grid-file", help="explicit scales, one per line")
    p.add_argument("--shuffle-seed", type=int)
    p.add_argument("--threads", type=int, help=f"default: ${THREADS_ENV} or all cores")
    p.add_argument("--subsample", type=int, default=1, help="plot every m-th grid point")
    p.add_argument("--out", required=True, help="output path stem")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmoc", description="Discrete modulus of continuity analysis.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="DMOC curve, Lipschitz estimate and seminorm")
    _add_data_args(p)
    p.add_argument("--batch-size", type=int, help="minibatch size C; exact when omitted")
    p.add_argument("--rho", default="identity", help="identity | power:<beta> | table:t=v,...")
    p.add_argument("--format", default="csv,json", help="comma list of csv, json, svg")
    p.add_argument("--timing", action="store_true", help="record wall time in the summary")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("align", help="alignment metrics between two curve files")
    p.add_argument("curve_a", help="reference curve")
    p.add_argument("curve_b")
    p.add_argument("--out")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("trivial-bound", help="product of per-layer spectral norms")
    p.add_argument("matrices", nargs="+", help="one CSV per weight matrix, first layer first")
    p.add_argument("--activation-lipschitz", help="comma list, one per layer (default all 1)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--out")
    p.set_defaults(func=cmd_trivial_bound)

    p = sub.add_parser("convergence-study", help="minibatch curves against the exact one")
    _add_data_args(p)
    p.add_argument("--batch-sizes", required=True, help="comma list of C values")
    p.add_argument("--exact-max-n", type=int, default=50_000, help="skip the exact curve above this N")
    p.add_argument("--format", default="csv,json")
    p.set_defaults(func=cmd_convergence_study)

    p = sub.add_parser("oracle", help="write synthetic datasets")
    p.add_argument("kind", choices=["net", "tanh", "classifier", "linear"])
    p.add_argument("--function", default="sqrt", choices=["sqrt", "power", "log_modulus"])
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--spacing", type=float, default=2**-6)
    p.add_argument("--centered", action="store_true")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--n-classes", type=int, default=3)
    p.add_argument("--points-per-class", type=int, default=50)
    p.add_argument("--min-cross-distance", type=float, default=0.1)
    p.add_argument("--weights", help="CSV weight matrix for the linear oracle")
    p.add_argument("--singular-pair", action="store_true")
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except io.InputError as exc:
        for line in exc.diagnostics:
            print(f"error: {line}", file=sys.stderr)
        return 2
    except (UsageError, ValueError, ConvergenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
