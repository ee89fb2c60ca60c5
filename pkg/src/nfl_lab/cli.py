"""Command-line interface: ``nfl-lab <subcommand> [flags]``.

Exit codes: 0 success, 1 validation or usage error, 2 runtime error
(including a failed Haar-moment verification).
"""

import argparse
import csv
import logging
import math
import os
import sys

from .bounds import (
    CLOSED_FORM_KINDS,
    DEFAULT_N_MATRICES,
    THRESHOLD_KINDS,
    BoundKind,
    bistochastic_mc_bound,
    bound_curve,
    quantum_nfl_bound,
    rank_threshold,
    stochastic_F,
    stochastic_F_monte_carlo,
)
from .errors import NFLError
from .experiments import dump_json, fmt_float, load_config, run_sweep, write_bounds_csv, write_result
from .sampling import SeedSpec, haar_trace_moments

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
MIN_HAAR_SAMPLES = 1000
Z_LIMIT = 4.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _default_seed():
    env = os.environ.get("NFL_LAB_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"NFL_LAB_SEED must be an integer, got {env!r}") from None


def _parse_kinds(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        if item == "all-closed-form":
            out.extend(CLOSED_FORM_KINDS)
        elif item == "all":
            out.extend(list(BoundKind))
        else:
            try:
                out.append(BoundKind(item))
            except ValueError:
                raise UsageError(f"unknown bound kind {item!r}") from None
    return out


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_bounds(args):
    if args.d < 2:
        raise UsageError("--d must be >= 2")
    if not 1 <= args.r <= args.d:
        raise UsageError("--r must lie in [1, d]")
    t_max = args.d if args.t_max is None else args.t_max
    if t_max < 0:
        raise UsageError("--t-max must be >= 0")
    seed = SeedSpec(args.seed if args.seed is not None else _default_seed())
    curves = [bound_curve(k, args.d, range(t_max + 1), r=args.r, n_matrices=args.matrices, seed=seed)
              for k in _parse_kinds(args.kinds)]
    if args.format == "csv":
        if args.out:
            write_bounds_csv(curves, args.out)
        else:
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(["kind", "d", "r", "t", "value", "stderr"])
            for c in curves:
                errs = c.mc_stderr or [None] * len(c.points)
                for (t, v), e in zip(c.points, errs):
                    w.writerow([c.kind.value, c.d, c.r, t, fmt_float(v), "" if e is None else fmt_float(e)])
    else:
        doc = [{"kind": c.kind.value, "d": c.d, "r": c.r, "points": [[t, v] for t, v in c.points],
                "mc_stderr": c.mc_stderr} for c in curves]
        _emit(dump_json(doc) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args):
    if not os.path.isfile(args.config):
        raise UsageError(f"config file {args.config!r} not found")
    cfg = load_config(args.config)
    res = run_sweep(cfg, threads=args.threads)
    written = write_result(res, "json") + write_result(res, "csv")
    print(f"{'r':>4} {'t':>4} {'mean_risk':>12} {'stderr':>10} {'sample_std':>11} {'bound':>10} {'z':>7}")
    for g in res.grid:
        b = quantum_nfl_bound(g.d, g.r, g.t)
        z = (g.mean_risk - b) / g.stderr if g.stderr > 0 else 0.0
        print(f"{g.r:>4} {g.t:>4} {g.mean_risk:>12.6f} {g.stderr:>10.2e} {g.sample_std:>11.2e} {b:>10.6f} {z:>7.2f}")
    print(f"wall time {res.wall_time_seconds:.1f}s; wrote {', '.join(written)}")
    return EXIT_OK


def cmd_verify_haar(args):
    if args.d < 2:
        raise UsageError("--d must be >= 2")
    if args.samples < MIN_HAAR_SAMPLES:
        raise UsageError(f"--samples must be >= {MIN_HAAR_SAMPLES}")
    seed = SeedSpec(args.seed if args.seed is not None else _default_seed())
    rows = haar_trace_moments(args.d, args.samples, seed, phi=args.phi)
    ok = True
    print(f"Haar moments, d={args.d}, samples={args.samples}, phi={args.phi}")
    print(f"{'quantity':<26} {'empirical':>12} {'exact':>8} {'stderr':>10} {'z':>7}")
    for label, mean, err, exact in rows:
        z = (mean - exact) / err if err > 0 else 0.0
        ok &= abs(z) <= Z_LIMIT
        print(f"{label:<26} {mean:>12.6f} {exact:>8.3f} {err:>10.2e} {z:>7.2f}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_classical_mc(args):
    seed = SeedSpec(args.seed if args.seed is not None else _default_seed())
    if args.d < 2:
        raise UsageError("--d must be >= 2")
    if args.kind == "bistochastic":
        if not 0 <= args.t < args.d:
            raise UsageError("--t must satisfy 0 <= t < d for the bistochastic bound")
        value, err = bistochastic_mc_bound(args.d, args.t, args.matrices, seed)
        print(dump_json({"kind": "classical_bistochastic_mc", "d": args.d, "t": args.t,
                         "n_matrices": args.matrices, "value": value, "stderr": err}))
    else:
        est, err = stochastic_F_monte_carlo(args.d, args.matrices, seed)
        exact = stochastic_F(args.d)
        z = (est - exact) / err if err > 0 else 0.0
        print(dump_json({"kind": "stochastic_oracle", "d": args.d, "samples": args.matrices,
                         "estimate": est, "stderr": err, "closed_form": exact, "z": z}))
    return EXIT_OK


def cmd_thresholds(args):
    if args.d < 2:
        raise UsageError("--d must be >= 2")
    t_max = args.d if args.t_max is None else args.t_max
    if t_max < 1:
        raise UsageError("--t-max must be >= 1")
    seed = SeedSpec(args.seed if args.seed is not None else _default_seed())
    mc = {"n_matrices": args.matrices, "seed": seed}
    rows = [["kind", "d", "t", "threshold_real", "threshold_ceil"]]
    for kind in THRESHOLD_KINDS:
        for t in range(1, t_max + 1):
            x = rank_threshold(kind, args.d, t, mc)
            rows.append([kind.value, args.d, t, fmt_float(x), math.ceil(x - 1e-9)])
    text = "".join(",".join(str(v) for v in row) + "\n" for row in rows)
    _emit(text, args.out)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="nfl-lab", description="Quantum and classical no-free-lunch simulations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bounds", help="tabulate bound curves for t = 0..t-max")
    b.add_argument("--d", type=int, required=True, help="dimension of the unknown map")
    b.add_argument("--r", type=int, default=1, help="Schmidt rank for the quantum bound (default 1)")
    b.add_argument("--t-max", type=int, default=None, help="largest t (default d)")
    b.add_argument("--kinds", default="all-closed-form",
                   help="comma-separated bound kinds, 'all-closed-form' or 'all'")
    b.add_argument("--out", default=None, help="output file (default stdout)")
    b.add_argument("--format", choices=("json", "csv"), default="csv")
    b.add_argument("--matrices", type=int, default=DEFAULT_N_MATRICES,
                   help="ensemble size for classical_bistochastic_mc")
    b.add_argument("--seed", type=int, default=None, help="master seed (default $NFL_LAB_SEED or 0)")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("sweep", help="run a Monte Carlo sweep from a JSON config")
    s.add_argument("--config", required=True, help="path to an ExperimentConfig JSON file")
    s.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes")
    s.set_defaults(func=cmd_sweep)

    h = sub.add_parser("verify-haar", help="check Haar trace moments against exact values")
    h.add_argument("--d", type=int, required=True)
    h.add_argument("--samples", type=int, default=100_000)
    h.add_argument("--seed", type=int, default=None)
    h.add_argument("--phi", type=float, default=0.7, help="phase in E[Re(TrY e^{i phi})^k]")
    h.set_defaults(func=cmd_verify_haar)

    c = sub.add_parser("classical-mc", help="Monte Carlo classical bounds")
    c.add_argument("--kind", choices=("bistochastic", "stochastic-oracle"), required=True)
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--t", type=int, default=0)
    c.add_argument("--matrices", type=int, default=DEFAULT_N_MATRICES,
                   help="bistochastic ensemble size, or Haar-state samples for stochastic-oracle")
    c.add_argument("--seed", type=int, default=None)
    c.set_defaults(func=cmd_classical_mc)

    t = sub.add_parser("thresholds", help="minimal Schmidt rank to beat each classical bound")
    t.add_argument("--d", type=int, required=True)
    t.add_argument("--t-max", type=int, default=None, help="largest t (default d)")
    t.add_argument("--out", default=None, help="output CSV (default stdout)")
    t.add_argument("--matrices", type=int, default=DEFAULT_N_MATRICES)
    t.add_argument("--seed", type=int, default=None)
    t.set_defaults(func=cmd_thresholds)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, NFLError) as exc:
        print(f"nfl-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"nfl-lab {args.command}: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
