"""Command-line entry point: ``bulkrate <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import counting, experiments, haar, opcalc, series
from .kernels import Ensemble, KernelSpec


def _ensemble(value: str) -> Ensemble:
    try:
        return Ensemble.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _n_list(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def _writer(out=None):
    return csv.writer(out or sys.stdout, lineterminator="\n")


# -- subcommands ------------------------------------------------------------


def cmd_coeffs(args) -> int:
    table = series.coeff_table(args.kind, args.max_k)
    if args.format == "json":
        doc = [{"k": k, "exact": str(q), "float": f} for k, q, f in table]
        print(json.dumps({"kind": table.kind, "entries": doc}, indent=2))
    else:
        w = _writer()
        w.writerow(["k", "exact", "float"])
        for k, q, f in table:
            w.writerow([k, str(q), repr(f)])
    return 0


def cmd_kernel_eval(args) -> int:
    spec = KernelSpec(args.ensemble, args.n, args.scaling)
    if args.scaling == "raw" and spec.ensemble is not Ensemble.SINE:
        lo, hi = spec.domain
        pts = np.linspace(lo, hi, args.grid, endpoint=False)
    else:
        pts = np.linspace(-args.s, args.s, args.grid)
    X, Y = np.meshgrid(pts, pts, indexing="ij")
    K = spec(X, Y)
    w = _writer()
    w.writerow(["x\\y"] + [repr(float(p)) for p in pts])
    for x, row in zip(pts, K):
        w.writerow([repr(float(x))] + [repr(float(v)) for v in row])
    return 0


def cmd_verify_decomposition(args) -> int:
    w = _writer()
    w.writerow(["which", "k", "s", "n", "part", "max_abs", "relative"])
    if args.which == "K23":
        r2, r3 = opcalc.verify_decomposition_K23(args.s, args.n)
        w.writerow(["K23", "", args.s, args.n, "K2", repr(r2.max_abs), repr(r2.relative)])
        w.writerow(["K23", "", args.s, args.n, "K3", repr(r3.max_abs), repr(r3.relative)])
    else:
        r = opcalc.verify_decomposition_A(args.k, args.s, args.n, prime=args.which == "Aprime")
        w.writerow([args.which, args.k, args.s, args.n, args.which, repr(r.max_abs), repr(r.relative)])
    return 0


def cmd_tracenorm(args) -> int:
    spec = KernelSpec(args.ensemble, args.n_matrix, "bulk")
    sine = KernelSpec(Ensemble.SINE)
    measured = opcalc.converged_trace_norm(lambda x, y: spec(x, y) - sine(x, y), args.s, args.grid)
    bound = opcalc.cue_trace_norm_bound(args.n_matrix, args.s) if spec.ensemble is Ensemble.U else None
    w = _writer()
    w.writerow(["ensemble", "N", "s", "grid", "trace_norm", "series_bound"])
    w.writerow([spec.ensemble.value, args.n_matrix, args.s, args.grid, repr(measured),
                "" if bound is None else repr(bound)])
    if bound is not None and measured > bound:
        print(f"error: measured trace norm {measured:.6e} exceeds series bound {bound:.6e}", file=sys.stderr)
        return 1
    return 0


def cmd_w1(args) -> int:
    spec = KernelSpec(args.ensemble, args.n_matrix, "bulk")
    interval = tuple(args.interval) if args.interval else (-args.s, args.s)
    chain = counting.distance_chain_check(spec, grid_size=args.grid, interval=interval)
    law, _ = counting.dpp_count_law(spec, interval, args.grid)
    w = _writer()
    w.writerow(["ensemble", "N", "lo", "hi", "dtv", "w1", "trace_norm", "mean", "variance"])
    w.writerow([spec.ensemble.value, args.n_matrix, interval[0], interval[1], repr(chain.dtv),
                repr(chain.w1), repr(chain.tnorm), repr(law.mean), repr(law.variance)])
    return 0 if chain.holds else 1


def cmd_sample(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    worst = 0.0
    for i in range(args.count):
        g = haar.sample_ensemble(args.ensemble, args.n_matrix, rng)
        u = g.entries
        worst = max(worst, float(np.max(np.abs(u.conj().T @ u - np.eye(g.dim)))))
        a = haar.eigenangles(g)
        for theta, x in zip(a.angles, haar.bulk_rescale(a)):
            rows.append((i, float(theta), float(x)))
    if args.emit_angles:
        with open(args.emit_angles, "w", encoding="utf-8") as fh:
            w = _writer(fh)
            w.writerow(["sample", "angle", "bulk"])
            for r in rows:
                w.writerow([r[0], repr(r[1]), repr(r[2])])
    w = _writer()
    w.writerow(["ensemble", "N", "dim", "count", "seed", "max_unitarity_residual"])
    w.writerow([args.ensemble.value, args.n_matrix, args.ensemble.matrix_dim(args.n_matrix),
                args.count, args.seed, repr(worst)])
    return 0


def cmd_mc_compare(args) -> int:
    spec = KernelSpec(args.ensemble, args.n_matrix, "bulk")
    interval = (-args.s, args.s)
    exact, summary = counting.dpp_count_law(spec, interval)
    mc = haar.mc_count_law(args.ensemble, args.n_matrix, interval, args.samples, args.seed)
    tv = counting.tv_integer(mc.law, exact)
    w = _writer()
    w.writerow(["ensemble", "N", "s", "samples", "tv", "exact_mean", "mc_mean", "mc_mean_se",
                "exact_variance", "mc_variance"])
    w.writerow([args.ensemble.value, args.n_matrix, args.s, args.samples, repr(tv), repr(exact.mean),
                repr(mc.mean), repr(mc.mean_se), repr(exact.variance), repr(mc.variance)])
    w.writerow([])
    w.writerow(["k", "exact_pmf", "mc_pmf"])
    n = max(exact.support_size, mc.law.support_size)
    for k, (p, q) in enumerate(zip(exact.padded(n), mc.law.padded(n))):
        w.writerow([k, repr(float(p)), repr(float(q))])
    return 0


def cmd_rate_sweep(args) -> int:
    kw = experiments.load_config(args.config) if args.config else {}
    for key, val in (("ensemble", args.ensemble), ("N_values", args.n_list), ("s", args.s),
                     ("grid_size", args.grid), ("seed", args.seed), ("mc_samples", args.mc_samples)):
        if val is not None:
            kw[key] = val
    if "ensemble" not in kw:
        print("error: --ensemble is required (flag or config)", file=sys.stderr)
        return 2
    config = experiments.SweepConfig(**kw)
    report = experiments.rate_sweep(config)
    text = experiments.emit_report(report, "csv", args.out)
    if not args.out:
        sys.stdout.write(text)
    if args.svg:
        experiments.emit_report(report, "svg", args.svg)
    print(f"# slope_w1={report.slope_w1:.4f} slope_trace_norm={report.slope_tnorm:.4f}"
          + (f" r2_w1={report.fit_w1.r_squared:.4f}" if report.fit_w1 else ""), file=sys.stderr)
    failures = report.failures()
    for f in failures:
        print(f"invariant violated: {f}", file=sys.stderr)
    return 1 if failures else 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bulkrate", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", help="Bernoulli / csc / cot / tan coefficient tables")
    c.add_argument("--kind", choices=series.COEFF_KINDS, required=True)
    c.add_argument("--max-k", type=int, default=10)
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.set_defaults(func=cmd_coeffs)

    c = sub.add_parser("kernel-eval", help="sample a kernel on an M x M grid")
    c.add_argument("--ensemble", type=_ensemble, required=True)
    c.add_argument("--n", type=int, default=16)
    c.add_argument("--scaling", choices=("raw", "bulk"), default="bulk")
    c.add_argument("--grid", type=int, default=9)
    c.add_argument("--s", type=float, default=1.0)
    c.add_argument("--format", choices=("csv",), default="csv")
    c.set_defaults(func=cmd_kernel_eval)

    c = sub.add_parser("verify-decomposition", help="residuals of the C_j/S_j operator decompositions")
    c.add_argument("--which", choices=("A", "Aprime", "K23"), required=True)
    c.add_argument("--k", type=int, default=0)
    c.add_argument("--s", type=float, default=1.0)
    c.add_argument("--n", type=int, default=opcalc.DEFAULT_GRID)
    c.set_defaults(func=cmd_verify_decomposition)

    c = sub.add_parser("tracenorm", help="trace norm of (bulk kernel - sine kernel) on [-s, s]")
    c.add_argument("--ensemble", type=_ensemble, required=True)
    c.add_argument("--n-matrix", type=int, required=True)
    c.add_argument("--s", type=float, default=1.0)
    c.add_argument("--grid", type=int, default=opcalc.DEFAULT_GRID)
    c.set_defaults(func=cmd_tracenorm)

    c = sub.add_parser("w1", help="d_TV, W1 and trace norm against the sine process")
    c.add_argument("--ensemble", type=_ensemble, required=True)
    c.add_argument("--n-matrix", type=int, required=True)
    c.add_argument("--s", type=float, default=1.0)
    c.add_argument("--grid", type=int, default=opcalc.DEFAULT_GRID)
    c.add_argument("--interval", type=float, nargs=2, metavar=("LO", "HI"))
    c.set_defaults(func=cmd_w1)

    c = sub.add_parser("sample", help="draw Haar matrices and their nontrivial eigenangles")
    c.add_argument("--ensemble", type=_ensemble, required=True)
    c.add_argument("--n-matrix", type=int, required=True)
    c.add_argument("--count", type=int, default=1)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--emit-angles", metavar="FILE")
    c.set_defaults(func=cmd_sample)

    c = sub.add_parser("mc-compare", help="Monte Carlo counting law vs the exact law")
    c.add_argument("--ensemble", type=_ensemble, required=True)
    c.add_argument("--n-matrix", type=int, required=True)
    c.add_argument("--s", type=float, default=1.0)
    c.add_argument("--samples", type=int, default=10_000)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_mc_compare)

    c = sub.add_parser("rate-sweep", help="W1 / trace-norm sweep over N with slope fits")
    c.add_argument("--ensemble", type=_ensemble)
    c.add_argument("--n-list", type=_n_list)
    c.add_argument("--s", type=float)
    c.add_argument("--grid", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--mc-samples", type=int)
    c.add_argument("--config", metavar="FILE", help="key = value file; flags override it")
    c.add_argument("--out", metavar="FILE")
    c.add_argument("--svg", metavar="FILE")
    c.set_defaults(func=cmd_rate_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, opcalc.QuadratureError, haar.SamplingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
