"""Command-line entry point: ``kfw {simulate,exact,constants,verify,report,rerun}``.

Exit codes: 0 success, 1 usage or input error, 2 verification threshold breached.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import constants as C
from .arith import build_tables
from .errors import KfwError
from .exact import DEFAULT_MAX_N, Quantity, expect_Sn, expect_Tn, expectation_series
from .montecarlo import WalkConfig, run_trials
from .output import emit, manifest, to_csv
from .verify import COLUMNS as VERIFY_COLUMNS
from .verify import Lemma, breaches, run_lemma

EXIT_OK, EXIT_USAGE, EXIT_THRESHOLD = 0, 1, 2

SIMULATE_COLUMNS = ["alpha", "k", "n", "trials", "seed", "mean_s", "stderr_s", "mean_t", "stderr_t",
                    "target_s", "target_t"]
TRIAL_COLUMNS = ["trial_index", "s_bar", "t_bar", "x", "y"]
EXACT_COLUMNS = ["quantity", "alpha", "k", "n", "value", "limit_constant", "residual",
                 "residual_times_sqrt_n"]
CONSTANT_COLUMNS = ["kind", "k", "value", "tail_bound", "prime_cutoff"]
REPORT_COLUMNS = ["alpha", "k", "n", "trials", "seed", "mean_s", "stderr_s", "mean_t", "stderr_t",
                  "exact_s", "exact_t", "target_s", "target_t", "residual_s", "residual_t", "error"]

# Parameters that do not influence results and so stay out of the manifest.
_NOT_ECHOED = {"command", "output", "config", "threads", "stamp", "func", "manifest_path"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int(text):
    """Integer that also accepts forms like 1e5."""
    value = float(text)
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"not an integer: {text}")
    return int(value)


def _list_of(conv):
    def parse(text):
        try:
            return [conv(t) for t in str(text).replace(" ", ",").split(",") if t]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    parse.__name__ = f"list of {conv.__name__}"
    return parse


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", choices=["csv", "json"], help="output format")
    common.add_argument("--output", default="-", help="output file (default stdout)")
    common.add_argument("--config", help="key=value file overriding defaults")
    common.add_argument("--threads", type=_int, help="worker threads (default $KFW_THREADS or CPU count)")
    common.add_argument("--stamp", action="store_true", help="record wall-clock time in the manifest")

    parser = _Parser(prog="kfw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate of S_n and T_n")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--k", type=_int, default=1)
    p.add_argument("--n", type=_int, default=100_000)
    p.add_argument("--trials", type=_int, default=200)
    p.add_argument("--seed", type=_int, default=42)
    p.add_argument("--per-trial", action="store_true", help="also dump every TrialResult")
    p.add_argument("--tol", type=float, default=C.TARGET_TOL, help="tolerance of the target constants")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", parents=[common], help="exact expectations / variances over a grid")
    p.add_argument("--quantity", type=_list_of(Quantity), default=[Quantity.MEAN_S])
    p.add_argument("--alpha", type=_list_of(float), default=[0.5])
    p.add_argument("--k", type=_list_of(_int), default=[1])
    p.add_argument("--grid", type=_list_of(_int), default=[250, 1000, 4000])
    p.add_argument("--max-n", type=_int, default=DEFAULT_MAX_N, help="override the quadratic-cost cap")
    p.add_argument("--tol", type=float, default=C.TARGET_TOL)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("constants", parents=[common], help="certified 1/zeta(2k) and twin product")
    p.add_argument("--kind", choices=["inv_zeta_2k", "twin_product", "both"], default="both")
    p.add_argument("--k", type=_list_of(_int), default=[1])
    p.add_argument("--tol", type=float, default=C.DEFAULT_TOL)
    p.add_argument("--max-cutoff", type=_int, default=C.DEFAULT_MAX_CUTOFF)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("verify", parents=[common], help="numeric checks of the binomial-sum lemmas")
    p.add_argument("--lemma", type=Lemma, required=True, choices=list(Lemma),
                   metavar="{" + ",".join(l.value for l in Lemma) + "}")
    p.add_argument("--alpha", type=_list_of(float))
    p.add_argument("--n", type=_list_of(_int))
    p.add_argument("--k", type=_list_of(_int))
    p.add_argument("--d-max", type=_int)
    p.add_argument("--u-max", type=_int)
    p.add_argument("--b-max", type=_int)
    p.add_argument("--a", type=_int)
    p.add_argument("--a1", type=_int)
    p.add_argument("--a2", type=_int)
    p.add_argument("--N", type=_list_of(_int))
    p.add_argument("--threshold", type=float, default=10.0)
    p.add_argument("--all", action="store_true", help="emit every residue / pair, not just the worst")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", parents=[common], help="combined convergence table")
    p.add_argument("--alpha", type=_list_of(float), default=[0.5])
    p.add_argument("--k", type=_list_of(_int), default=[1])
    p.add_argument("--n-grid", type=_list_of(_int), default=[100_000])
    p.add_argument("--trials", type=_int, default=200)
    p.add_argument("--seed", type=_int, default=42)
    p.add_argument("--exact-cap", type=_int, default=2000, help="largest n given an exact expectation")
    p.add_argument("--tol", type=float, default=C.TARGET_TOL)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rerun", help="repeat a run from its manifest (or JSON output)")
    p.add_argument("manifest_path")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_rerun)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _render(value):
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    if hasattr(value, "value"):
        return str(value.value)
    return repr(value) if isinstance(value, float) else str(value)


def params_to_argv(subparser, params):
    """Turn {dest: value} into option strings understood by ``subparser``."""
    by_dest = {a.dest: a for a in subparser._actions if a.option_strings}
    argv = []
    for key, value in params.items():
        dest = key.replace("-", "_")
        action = by_dest.get(dest)
        if action is None:
            raise KfwError(f"unknown parameter {key!r}")
        if value is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            if str(value).lower() in ("1", "true", "yes", "on"):
                argv.append(action.option_strings[0])
            continue
        argv += [action.option_strings[0], _render(value)]
    return argv


def read_config(path):
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise KfwError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _echo(args):
    return {k: v for k, v in vars(args).items() if k not in _NOT_ECHOED}


def _man(args, seed=None, outputs=()):
    names = [os.path.basename(o) for o in outputs if o and o != "-"]
    return manifest(args.command, _echo(args), base_seed=seed, outputs=names, stamp=args.stamp)


def _write(args, text):
    if text is not None:
        sys.stdout.write(text)


def cmd_simulate(args):
    fmt = args.out or "csv"
    if args.per_trial and fmt == "csv" and args.output == "-":
        raise KfwError("--per-trial with csv output needs --output")
    config = WalkConfig(alpha=args.alpha, k=args.k, n=args.n, trials=args.trials,
                        base_seed=args.seed, threads=args.threads)
    results, agg = run_trials(config)
    row = {
        "alpha": args.alpha, "k": args.k, "n": args.n, "trials": args.trials, "seed": args.seed,
        "mean_s": agg.mean_s, "stderr_s": agg.stderr_s, "mean_t": agg.mean_t, "stderr_t": agg.stderr_t,
        "target_s": C.inv_zeta_2k(args.k, args.tol).value,
        "target_t": C.twin_product(args.k, args.tol).value,
    }
    trial_rows = [
        {"trial_index": r.trial_index, "s_bar": r.s_bar, "t_bar": r.t_bar,
         "x": r.final_point[0], "y": r.final_point[1]}
        for r in results
    ]
    outputs = [args.output]
    extra = None
    if args.per_trial:
        if fmt == "json":
            extra = {"trials": trial_rows}
        else:
            outputs.append(f"{args.output}.trials.csv")
    man = _man(args, seed=args.seed, outputs=outputs)
    _write(args, emit(fmt, [row], SIMULATE_COLUMNS, man, args.output, extra))
    if args.per_trial and fmt == "csv":
        with open(outputs[1], "w", newline="") as fh:
            fh.write(to_csv(trial_rows, TRIAL_COLUMNS))
    return EXIT_OK


def cmd_exact(args):
    fmt = args.out or "csv"
    rows, slopes = [], []
    for k in args.k:
        tables = build_tables(max(args.grid) + 1, k)
        for q in args.quantity:
            for a in args.alpha:
                series = expectation_series(q, a, k, args.grid, tables=tables, max_n=args.max_n, tol=args.tol)
                rows.extend(series.rows())
                slopes.append({"quantity": q.value, "alpha": a, "k": k, "loglog_slope": series.loglog_slope()})
    man = _man(args, outputs=[args.output])
    _write(args, emit(fmt, rows, EXACT_COLUMNS, man, args.output, {"slopes": slopes}))
    return EXIT_OK


def cmd_constants(args):
    fmt = args.out or "json"
    kinds = ["inv_zeta_2k", "twin_product"] if args.kind == "both" else [args.kind]
    rows = []
    for kind in kinds:
        f = C.inv_zeta_2k if kind == "inv_zeta_2k" else C.twin_product
        for k in args.k:
            rows.append(f(k, args.tol, args.max_cutoff).to_dict())
    man = _man(args, outputs=[args.output])
    _write(args, emit(fmt, rows, CONSTANT_COLUMNS, man, args.output))
    return EXIT_OK


def cmd_verify(args):
    fmt = args.out or "csv"
    rows = run_lemma(args.lemma, alpha=args.alpha, n=args.n, k=args.k, d_max=args.d_max,
                     u_max=args.u_max, b_max=args.b_max, a=args.a, a1=args.a1, a2=args.a2,
                     N=args.N, all_rows=args.all)
    worst = max((r["scaled_residual"] for r in rows), default=0.0)
    man = _man(args, outputs=[args.output])
    extra = {"max_scaled_residual": worst, "threshold": args.threshold}
    _write(args, emit(fmt, rows, VERIFY_COLUMNS, man, args.output, extra))
    print(f"{args.lemma.value}: {len(rows)} rows, max scaled residual {worst:.6g} "
          f"(threshold {args.threshold:g})", file=sys.stderr)
    bad = breaches(rows, args.threshold)
    if bad:
        sys.stderr.write(to_csv(bad, VERIFY_COLUMNS))
        return EXIT_THRESHOLD
    return EXIT_OK


def report_rows(alphas, ks, n_grid, trials, seed, exact_cap=2000, tol=C.TARGET_TOL, threads=None):
    """One row per (alpha, k, n); a failing cell records its error and the table continues."""
    rows = []
    tables = {}
    for k in ks:
        for a in alphas:
            for n in n_grid:
                row = {"alpha": a, "k": k, "n": n, "trials": trials, "seed": seed}
                try:
                    row["target_s"] = C.inv_zeta_2k(k, tol).value
                    row["target_t"] = C.twin_product(k, tol).value
                    _, agg = run_trials(WalkConfig(alpha=a, k=k, n=n, trials=trials, base_seed=seed,
                                                   threads=threads))
                    row.update(mean_s=agg.mean_s, stderr_s=agg.stderr_s,
                               mean_t=agg.mean_t, stderr_t=agg.stderr_t,
                               residual_s=agg.mean_s - row["target_s"],
                               residual_t=agg.mean_t - row["target_t"])
                    if n <= exact_cap:
                        t = tables.get(k)
                        if t is None or t.limit < n + 1:
                            top = max([m for m in n_grid if m <= exact_cap]) + 1
                            t = tables[k] = build_tables(top, k)
                        row["exact_s"] = expect_Sn(n, a, k, t, max_n=exact_cap)
                        row["exact_t"] = expect_Tn(n, a, k, t, max_n=exact_cap)
                except (KfwError, ValueError, ArithmeticError, MemoryError) as exc:
                    row["error"] = f"{type(exc).__name__}: {exc}"
                rows.append(row)
    return rows


def cmd_report(args):
    fmt = args.out or "csv"
    if list(args.n_grid) != sorted(args.n_grid):
        raise KfwError("--n-grid must be ascending")
    rows = report_rows(args.alpha, args.k, args.n_grid, args.trials, args.seed,
                       args.exact_cap, args.tol, args.threads)
    man = _man(args, seed=args.seed, outputs=[args.output])
    _write(args, emit(fmt, rows, REPORT_COLUMNS, man, args.output))
    return EXIT_OK


def cmd_rerun(args):
    with open(args.manifest_path) as fh:
        data = json.load(fh)
    man = data.get("manifest", data)
    command = man["subcommand"]
    parser = build_parser()
    argv = [command] + params_to_argv(_subparser(parser, command), man["params"])
    argv += ["--output", args.output]
    if man.get("timestamp"):
        argv.append("--stamp")
    return main(argv)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            injected = params_to_argv(_subparser(parser, args.command), read_config(args.config))
            args = parser.parse_args([argv[0]] + injected + argv[1:])
        return args.func(args)
    except (KfwError, ValueError, OSError) as exc:
        print(f"kfw: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
