"""Command-line entry point: ``mc-curse <subcommand> [flags]``.

Output is a plain table on a terminal and a JSON envelope otherwise; pass
``--format`` to choose. ``--config FILE`` presets flags from ``key = value``
lines, and flags given on the command line win. Exit status is 0 on success,
2 on invalid input and 1 on runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds, distributions, experiments
from .output import FORMATS, ResultEnvelope, emit_series, series_table

SEED_ENV = "MC_CURSE_SEED"
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def count_arg(text: str) -> int:
    """Integer that also accepts scientific notation such as ``1e6``."""
    try:
        return int(text)
    except ValueError:
        val = float(text)
        if not val.is_integer():
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        return int(val)


def list_arg(kind):
    def parse(text: str) -> list:
        return [kind(t) for t in str(text).split(",") if t.strip()]

    return parse


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return experiments.DEFAULT_SEED


def read_config(path) -> dict:
    """Flat ``key = value`` file; blank lines and ``#`` comments are ignored."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    for num, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise ValueError(f"missing required flag --{name.replace('_', '-')}")


# --- handlers -------------------------------------------------------------

NMIN_BALLS = ("l2", "linf-axis", "linf-diag", "l1", "multiobj")


def cmd_nmin(args):
    _need(args, "delta", "p")
    if args.ball != "linf-axis":
        _need(args, "dim")
    fns = {
        "l2": lambda: bounds.nmin_l2(args.dim, args.delta, args.p),
        "linf-axis": lambda: bounds.nmin_box_axis(args.delta, args.p),
        "linf-diag": lambda: bounds.nmin_box_diag(args.dim, args.delta, args.p),
        "l1": lambda: bounds.nmin_l1(args.dim, args.delta, args.p),
        "multiobj": lambda: bounds.nmin_multiobjective(args.dim, args.delta, args.p),
    }
    if args.ball not in fns:
        raise ValueError(f"--ball must be one of {', '.join(NMIN_BALLS)}")
    n = fns[args.ball]()
    payload = {"ball": args.ball, "dim": args.dim, "delta": args.delta, "p": args.p, "nmin": n, "exact": n.is_ceiled}
    return ResultEnvelope("nmin", payload)


def cmd_nmin_lower(args):
    _need(args, "dim", "delta", "p")
    appr, tilde = bounds.nmin_l2_lower(args.dim, args.delta, args.p)
    exact = bounds.nmin_l2(args.dim, args.delta, args.p)
    payload = {"dim": args.dim, "delta": args.delta, "p": args.p, "nmin": exact, "n_appr": appr, "n_appr_tilde": tilde}
    return ResultEnvelope("nmin-lower", payload)


def cmd_prob(args):
    _need(args, "dim", "delta", "count")
    if args.kind == "l2":
        val = bounds.prob_empirical_max_l2(args.dim, args.delta, args.count)
    elif args.kind == "image":
        val = bounds.prob_boundary_hit(args.dim, args.delta, args.count)
    else:
        raise ValueError("--kind must be l2 or image")
    payload = {"kind": args.kind, "dim": args.dim, "delta": args.delta, "count": args.count, "probability": val}
    return ResultEnvelope("prob", payload)


def cmd_cap(args):
    _need(args, "r", "h", "dim")
    val = bounds.cap_success_probability(args.r, args.h, args.dim)
    return ResultEnvelope("cap", {"r": args.r, "h": args.h, "dim": args.dim, "probability": val})


def cmd_mode(args):
    _need(args, "dim", "count")
    payload = {
        "dim": args.dim,
        "count": args.count,
        "mode": bounds.mode_empirical_max(args.dim, args.count),
        "mode_approx": bounds.mode_empirical_max_approx(args.dim, args.count),
    }
    return ResultEnvelope("mode", payload)


def cmd_expect(args):
    _need(args, "dim", "count")
    payload = {
        "dim": args.dim,
        "count": args.count,
        "expectation": bounds.expect_empirical_max(args.dim, args.count),
        "expectation_approx": bounds.expect_empirical_max_approx(args.dim, args.count),
    }
    return ResultEnvelope("expect", payload)


def cmd_grid_card(args):
    _need(args, "dim", "delta")
    card = bounds.uniform_grid_cardinality(args.dim, args.delta)
    return ResultEnvelope("grid-card", {"dim": args.dim, "delta": args.delta, "cardinality": card})


def _validate(args, name, fn):
    _need(args, "dim", "m", "count")
    seed = resolve_seed(args.seed)
    rep = fn(args.dim, args.m, args.count, seed=seed, alpha=args.alpha)
    payload = {"dim": args.dim, "m": args.m, **rep.as_dict()}
    return ResultEnvelope(name, payload, seed=seed)


def cmd_validate_fact1(args):
    return _validate(args, "validate-fact1", distributions.validate_fact1)


def cmd_validate_fact2(args):
    return _validate(args, "validate-fact2", distributions.validate_fact2)


def _spec(args, objective):
    seed = resolve_seed(args.seed)
    spec = experiments.ExperimentSpec(
        args.ball, args.dim, args.count, objective=objective, seed=seed, repetitions=args.reps,
        chunk_size=args.chunk_size, max_draws=args.max_draws, workers=args.workers,
        scatter=getattr(args, "scatter", 0) or 0,
    )
    return spec, seed


def _stats_envelope(name, args, spec, stats, seed):
    payload = {"ball": spec.ball.value, "dim": spec.n, "count": spec.count, **stats.as_dict()}
    header = ["repetition", "maximum"] + (["boundary_proximity"] if stats.boundary_proximity is not None else [])
    rows = []
    for r, m in enumerate(stats.maxima):
        row = [r, float(m)]
        if stats.boundary_proximity is not None:
            row.append(float(stats.boundary_proximity[r]))
        rows.append(row)
    return ResultEnvelope(name, payload, header=header, rows=rows, kind="table", seed=seed)


def cmd_run_max(args):
    _need(args, "dim", "count")
    obj = {"axis": experiments.axis_objective, "diag": experiments.diagonal_objective}.get(args.objective)
    if obj is None:
        raise ValueError("--objective must be axis or diag")
    spec, seed = _spec(args, obj(args.dim))
    stats = experiments.run_empirical_max(spec, threshold=args.threshold)
    return _stats_envelope("run-max", args, spec, stats, seed)


def cmd_run_image2d(args):
    _need(args, "dim", "count")
    args.ball = "l2"
    spec, seed = _spec(args, experiments.default_image_objective(args.dim))
    stats = experiments.run_image2d(spec, threshold=args.threshold)
    env = _stats_envelope("run-image2d", args, spec, stats, seed)
    if args.scatter_out and stats.scatter is not None:
        path = _write_scatter(stats.scatter, args.scatter_out)
        env.payload["scatter_path"] = str(path)
    return env


def _write_scatter(points: np.ndarray, path) -> Path:
    import csv

    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["y1", "y2"])
            w.writerows([repr(float(a)), repr(float(b))] for a, b in points)
    except OSError as exc:
        raise OSError(f"cannot write scatter to {path}: {exc.strerror or exc}") from exc
    return path


def cmd_calibrate(args):
    _need(args, "dim", "delta")
    if args.count is None and args.p is None:
        raise ValueError("calibrate needs --count or --p")
    if args.kind == "l2":
        formula, objective, nmin = bounds.prob_empirical_max_l2, None, bounds.nmin_l2
    elif args.kind == "image":
        formula, objective, nmin = bounds.prob_boundary_hit, experiments.default_image_objective(args.dim), bounds.nmin_multiobjective
    else:
        raise ValueError("--kind must be l2 or image")
    if args.count is None:
        args.count = int(nmin(args.dim, args.delta, args.p))
    args.ball = "l2"
    spec, seed = _spec(args, objective)
    rec = experiments.calibrate_probability(formula, spec, args.delta)
    payload = {"kind": args.kind, "dim": args.dim, "delta": args.delta, "count": args.count, **rec.as_dict()}
    return ResultEnvelope("calibrate", payload, seed=seed)


def _table_envelope(name, table, seed=None):
    header = ["row"] + [str(c) for c in table.columns]
    rows = [[label] + list(vals) for label, vals in table.rows.items()]
    return ResultEnvelope(name, table.as_dict(), header=header, rows=rows, kind="table", seed=seed)


def cmd_table1(args):
    return _table_envelope("table1", experiments.reproduce_table1(args.delta or 0.05, args.p or 0.95))


def cmd_table2(args):
    seed = resolve_seed(args.seed)
    dims = tuple(args.dims) if args.dims else experiments.TABLE2_DIMS
    table = experiments.reproduce_table2(
        args.budget, args.reps, seed, dims=dims, workers=args.workers, monte_carlo=not args.no_mc
    )
    return _table_envelope("table2", table, seed if not args.no_mc else None)


SERIES_CURVES = ("scalar-pdf", "m2-pdf", "m2-cdf", "eta-pdf", "eta-cdf", "constant")


def _curves(args) -> dict:
    dims = args.dims or [20]
    counts = args.counts or [10**k for k in range(2, 11)]
    c = args.curve
    if c == "scalar-pdf":
        return {f"n={n}": (lambda n: lambda x: distributions.pdf_rho_scalar(n, x))(n) for n in dims}
    if c == "m2-pdf":
        return {f"n={n}": (lambda n: lambda x: distributions.pdf_rho_m2(n, x))(n) for n in dims}
    if c == "m2-cdf":
        return {f"n={n}": (lambda n: lambda x: distributions.cdf_rho_m2(n, x))(n) for n in dims}
    if c in ("eta-pdf", "eta-cdf"):
        fn = distributions.pdf_empirical_max_m2 if c == "eta-pdf" else distributions.cdf_empirical_max_m2
        return {f"N={k}": (lambda k: lambda x: fn(dims[0], k, x))(k) for k in counts}
    if c == "constant":
        return {"f": lambda x: args.value}
    raise ValueError(f"--curve must be one of {', '.join(SERIES_CURVES)}")


def cmd_emit_series(args):
    curves = _curves(args)
    domain = (args.lo, args.hi)
    header, rows = series_table(curves, domain, args.resolution)
    payload = {"curve": args.curve, "domain": list(domain), "resolution": args.resolution, "columns": header}
    if args.out:
        payload["path"] = str(emit_series(curves, domain, args.resolution, args.out))
    else:
        payload["x"] = [r[0] for r in rows]
        payload["series"] = {name: [r[i] for r in rows] for i, name in enumerate(header[1:], 1)}
    return ResultEnvelope("emit-series", payload, header=header, rows=rows, kind="series")


# --- parser ---------------------------------------------------------------


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, help="output format (default: table on a terminal, else json)")
    common.add_argument("--config", help="file of key = value flag presets")

    parser = argparse.ArgumentParser(prog="mc-curse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)
    subs = {}

    def add(name, handler, help_text, *flags):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        for names, kw in flags:
            p.add_argument(*names, **kw)
        p.set_defaults(handler=handler)
        subs[name] = p
        return p

    dim = (["--dim", "-n"], dict(type=int, help="dimension n"))
    delta = (["--delta"], dict(type=float, help="relative accuracy delta"))
    prob = (["--p"], dict(type=float, help="target probability p"))
    count = (["--count", "-N"], dict(type=count_arg, help="sample size N"))
    seed = (["--seed"], dict(type=count_arg, help=f"RNG seed (default: ${SEED_ENV} or {experiments.DEFAULT_SEED})"))
    reps = (["--reps", "-R"], dict(type=count_arg, default=1, help="repetitions"))
    run_flags = [
        (["--chunk-size"], dict(type=count_arg, help="draws per chunk (part of the reproducibility key)")),
        (["--workers"], dict(type=int, default=1, help="worker threads")),
        (["--max-draws"], dict(type=count_arg, default=experiments.DEFAULT_MAX_DRAWS, help="cap on total draws")),
        (["--threshold"], dict(type=float, help="count repetitions whose maximum exceeds this")),
    ]
    alpha = (["--alpha"], dict(type=float, default=0.01, help="KS significance level"))

    add("nmin", cmd_nmin, "minimal sample size for a delta-accurate maximum with probability p",
        (["--ball"], dict(default="l2", help="|".join(NMIN_BALLS))), dim, delta, prob)
    add("nmin-lower", cmd_nmin_lower, "closed-form lower approximations of the l2 sample size", dim, delta, prob)
    add("prob", cmd_prob, "probability that N draws reach a delta-accurate maximum",
        (["--kind"], dict(default="l2", help="l2|image")), dim, delta, count)
    add("cap", cmd_cap, "relative volume of a spherical cap",
        (["--r"], dict(type=float, help="ball radius")), (["--h"], dict(type=float, help="cap height")), dim)
    add("mode", cmd_mode, "mode of the maximal squared image norm (two objectives)", dim, count)
    add("expect", cmd_expect, "expectation of the maximal squared image norm (two objectives)", dim, count)
    add("grid-card", cmd_grid_card, "number of uniform mesh points for cell size delta", dim, delta)
    m = (["--m"], dict(type=int, help="number of objectives (rows)"))
    add("validate-fact1", cmd_validate_fact1, "KS test of projected samples against the beta law",
        dim, m, (["--count", "-N"], dict(type=count_arg, default=10**5, help="samples")), seed, alpha)
    add("validate-fact2", cmd_validate_fact2, "KS test of n*rho against chi-square(m)",
        dim, m, (["--count", "-N"], dict(type=count_arg, default=10**5, help="samples")), seed, alpha)
    add("run-max", cmd_run_max, "simulate the empirical maximum of a linear objective",
        (["--ball"], dict(default="l2", help="l1|l2|linf")),
        (["--objective"], dict(default="axis", help="axis (x_1) or diag (sum of x)")),
        dim, count, seed, reps, *run_flags)
    add("run-image2d", cmd_run_image2d, "simulate the 2D image of the n-ball under two orthonormal objectives",
        dim, count, seed, reps, *run_flags,
        (["--scatter"], dict(type=count_arg, default=0, help="keep the first K images of repetition 0")),
        (["--scatter-out"], dict(help="CSV path for the scatter")))
    add("calibrate", cmd_calibrate, "compare a closed-form probability with simulation",
        (["--kind"], dict(default="l2", help="l2|image")), dim, delta, count,
        (["--p"], dict(type=float, help="derive N as the minimal sample size for p")),
        seed, (["--reps", "-R"], dict(type=count_arg, default=10**4, help="repetitions")), *run_flags[:3])
    add("table1", cmd_table1, "minimal sample sizes for the l2, box and l1 balls", delta, prob)
    add("table2", cmd_table2, "maxima of sum(x) on the box: mesh, Sobol, Monte Carlo",
        (["--budget", "-N"], dict(type=count_arg, default=10**6, help="points per method")),
        (["--reps", "-R"], dict(type=count_arg, default=100, help="Monte Carlo repetitions")),
        seed, (["--dims"], dict(type=list_arg(int), help="comma-separated dimensions")),
        (["--workers"], dict(type=int, default=1, help="worker threads")),
        (["--no-mc"], dict(action="store_true", help="skip the Monte Carlo row")))
    add("emit-series", cmd_emit_series, "write curve data as CSV for plotting",
        (["--curve"], dict(default="scalar-pdf", help="|".join(SERIES_CURVES))),
        (["--dims"], dict(type=list_arg(int), help="dimensions (family over n)")),
        (["--counts"], dict(type=list_arg(count_arg), help="sample sizes (family over N)")),
        (["--lo"], dict(type=float, default=0.001)), (["--hi"], dict(type=float, default=0.999)),
        (["--resolution"], dict(type=int, default=1000)),
        (["--value"], dict(type=float, default=1.0, help="level of the constant curve")),
        (["--out", "-o"], dict(help="CSV output path")))
    return parser, subs


def _apply_config(subparser: argparse.ArgumentParser, config: dict) -> None:
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "handler", "config")}
    defaults = {}
    for key, value in config.items():
        if key not in actions:
            raise ValueError(f"config key {key!r} is not a flag of this command")
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            low = value.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError(f"config key {key!r} expects a boolean")
            defaults[key] = low in _TRUE
        else:
            defaults[key] = value  # argparse runs string defaults through the flag's type
    subparser.set_defaults(**defaults)


def parse_args(argv):
    parser, subs = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config:
        command = next((t for t in rest if t in subs), None)
        if command is not None:
            _apply_config(subs[command], read_config(known.config))
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse has already printed usage
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"mc-curse: error: {exc}", file=sys.stderr)
        return 2
    fmt = args.format or ("table" if sys.stdout.isatty() else "json")
    try:
        env = args.handler(args)
    except ValueError as exc:
        print(f"mc-curse {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: I/O, non-convergence, ...
        print(f"mc-curse {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(env.render(fmt))
    return 0


if __name__ == "__main__":
    sys.exit(main())
