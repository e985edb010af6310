"""Command-line interface: ``halfway density|sample|simulate|validate``.

Exit codes: 0 success, 1 validation failure (or nothing but censored
paths), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .analytic import DomainError, HalfwayParams, halfway_cdf, halfway_density, halfway_quantile
from .samplers import PathConfig, sample_batch


class UsageError(Exception):
    pass


def fmt(v):
    """17 significant digits: round-trips any double."""
    return format(float(v), ".17g")


def parse_grid(spec):
    """``min:max:count[:lin|log]`` -> array of points."""
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise UsageError(f"grid must be min:max:count[:lin|log], got {spec!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}: {exc}") from None
    kind = parts[3] if len(parts) == 4 else "lin"
    if count < 1 or hi < lo:
        raise UsageError(f"bad grid {spec!r}")
    if kind == "lin":
        return np.linspace(lo, hi, count)
    if kind == "log":
        if lo <= 0:
            raise UsageError("log grid needs a positive minimum")
        return np.geomspace(lo, hi, count)
    raise UsageError(f"grid spacing must be lin or log, got {kind!r}")


def parse_levels(spec):
    try:
        return [float(q) for q in spec.split(",") if q.strip()]
    except ValueError:
        raise UsageError(f"bad quantile list {spec!r}") from None


def _emit(out, header, rows, fmt_name):
    if fmt_name == "json":
        json.dump([dict(zip(header, map(float, r))) for r in rows], out, indent=1)
        out.write("\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([fmt(v) for v in r])


def cmd_density(args, out):
    params = HalfwayParams(args.x, args.u)
    if args.quantile is not None:
        levels = parse_levels(args.quantile)
        rows = [(q, halfway_quantile(params, q)) for q in levels]
        header = ["q", "quantile"]
    else:
        if args.y is None:
            raise UsageError("one of --y or --quantile is required")
        ys = parse_grid(args.y)
        if args.cdf:
            rows = [(y, halfway_cdf(params, float(y))) for y in ys]
            header = ["y", "cdf"]
        else:
            rows = list(zip(ys, np.atleast_1d(halfway_density(params, ys))))
            header = ["y", "p"]
    _emit(out, header, rows, args.format)
    return 0


def _path_config(args, params):
    t_max = args.t_max if args.t_max is not None else 1e6 * params.x**2
    return PathConfig(dt=args.dt, t_max=t_max, bridge_correction=not args.no_bridge)


def cmd_sample(args, out, err):
    params = HalfwayParams(args.x, args.u)
    method = args.method
    # path flags are checked even when the exact sampler ignores them
    config = _path_config(args, params)
    if method != "path":
        config = None
    if args.n < 1 or args.streams < 1 or args.threads < 1:
        raise UsageError("--n, --streams and --threads must be positive")
    batch = sample_batch(params, args.n, method, config, seed=args.seed,
                         n_streams=args.streams, threads=args.threads)

    meta = batch.metadata()
    meta["version"] = __version__
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _write_values(fh, batch.values)
    else:
        _write_values(out, batch.values)
    meta_path = args.meta or (args.out + ".json" if args.out else None)
    if meta_path:
        with open(meta_path, "w") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
    if batch.values.size == 0:
        print("error: every path was censored; increase --t-max", file=err)
        return 1
    return 0


def _write_values(fh, values):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["value"])
    for v in values:
        writer.writerow([fmt(v)])


def cmd_validate(args, out, err):
    from .validation import run_validation

    if args.threads < 1:
        raise UsageError("--threads must be positive")

    def progress(rec):
        status = "PASS" if rec.passed else "FAIL"
        print(f"{status} {rec.name}: observed={rec.observed:.6g} threshold={rec.threshold:.6g} "
              f"({rec.runtime:.1f}s)", file=err)

    report = run_validation(seed=args.seed, full=args.full, threads=args.threads, progress=progress)
    text = report.to_json()
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    else:
        out.write(text + "\n")
    print("overall: " + ("PASS" if report.overall_pass else "FAIL"), file=err)
    return 0 if report.overall_pass else 1


def _sample_flags(p, method_choice=True):
    if method_choice:
        p.add_argument("--method", choices=["exact", "path"], default="exact")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--streams", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=None, help="censoring horizon (default 1e6*x^2)")
    p.add_argument("--no-bridge", action="store_true", help="disable the bridge-crossing correction")
    p.add_argument("--out", help="CSV file for the draws (default: stdout)")
    p.add_argument("--meta", help="JSON sidecar with batch metadata (default: OUT.json when --out is set)")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="halfway", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("density", help="density, CDF or quantiles of B(u*tau)")
    d.add_argument("--u", type=float, required=True)
    d.add_argument("--x", type=float, required=True)
    d.add_argument("--y", help="grid min:max:count[:lin|log]")
    d.add_argument("--cdf", action="store_true", help="emit the CDF instead of the density")
    d.add_argument("--quantile", help="comma-separated probability levels")
    d.add_argument("--format", choices=["csv", "json"], default="csv")

    s = sub.add_parser("sample", help="draw samples of B(u*tau)")
    _sample_flags(s)

    sim = sub.add_parser("simulate", help="alias of 'sample --method path'")
    _sample_flags(sim, method_choice=False)
    sim.set_defaults(method="path")

    v = sub.add_parser("validate", help="run the validation checks")
    mode = v.add_mutually_exclusive_group()
    mode.add_argument("--quick", action="store_true", help="analytic and oracle checks only (default)")
    mode.add_argument("--full", action="store_true", help="also run every sampler check")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--report", help="write the JSON report here instead of stdout")
    return parser


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        if args.command == "density":
            return cmd_density(args, out)
        if args.command in ("sample", "simulate"):
            return cmd_sample(args, out, err)
        return cmd_validate(args, out, err)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return 2


def run(argv=None):
    """Console-script entry point."""
    sys.exit(main(argv))


__all__ = ["main", "run", "build_parser", "parse_grid", "fmt"]
