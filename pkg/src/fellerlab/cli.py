"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a threshold check fails,
2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import genfun
from .brw import DELTA, simulate
from .errors import FellerLabError
from .generator import consistency_residuals, make_domain_function
from .harness import (
    STATISTICS, ExperimentConfig, Thresholds, occupation_csv, occupation_scaling, run_convergence,
)
from .io import format_measure, parse_measure_spec, read_kv, read_params
from .scaling import PRESETS, REGIMES, ScalingScheme, build_measure, build_measure_auto, infer_regime
from .scaling import preset as make_preset
from .scaling import start_state

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _params_and_regime(args):
    if (args.preset is None) == (getattr(args, "params", None) is None):
        raise UsageError("give exactly one of --preset or --params")
    if args.preset is not None:
        p = make_preset(args.preset)
        params, regime = p.params, p.regime
    else:
        params = read_params(args.params)
        regime = infer_regime(params)
    forced = getattr(args, "regime", "auto")
    return params, (regime if forced in (None, "auto") else forced)


# ---------------------------------------------------------------- measure

def cmd_measure_build(args) -> int:
    params, regime = _params_and_regime(args)
    scheme = ScalingScheme(regime, args.n, params)
    if args.auto_bump:
        measure, n = build_measure_auto(scheme)
        if n != args.n:
            print(f"n bumped from {args.n} to {n}", file=sys.stderr)
    else:
        measure = build_measure(scheme)
    _emit(format_measure(measure), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    params, regime = _params_and_regime(args)
    measure, n = build_measure_auto(ScalingScheme(regime, args.n, params))
    steps = math.floor(n * n * args.t)
    record = "full" if args.full_out else "summary"
    ens = simulate(measure, start_state(args.x0, n), steps, args.paths, args.seed, record=record)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write("# fellerlab-ensemble/1\n")
    w.writerow(["path_id", "final_state", "killed_at", "visits_to_zero", "rescaled"])
    for k in range(ens.count):
        ka = int(ens.killed_at[k])
        if ka >= 0:
            w.writerow([k, DELTA, ka, int(ens.visits_to_zero[k]), DELTA])
        else:
            f = int(ens.final[k])
            w.writerow([k, f, "", int(ens.visits_to_zero[k]), repr(f / n)])
    if args.full_out:
        with open(args.full_out, "w", newline="") as fh:
            fw = csv.writer(fh, lineterminator="\n")
            fw.writerow(["path_id", "step", "state"])
            for k, path in enumerate(ens.paths):
                for step, state in enumerate(path.states):
                    fw.writerow([k, step, state])
                if path.killed_at is not None:
                    fw.writerow([k, path.killed_at, DELTA])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- genfun

def cmd_genfun_eval(args) -> int:
    m = parse_measure_spec(args.p)
    for x in _floats(args.x):
        print(repr(genfun.f_closed(m, x)))
    return EXIT_OK


def cmd_genfun_table(args) -> int:
    m = parse_measure_spec(args.p)
    series = genfun.f_series(m, args.K)
    rows = ["x,f_closed,f_series_partial,tail_bound"]
    for x in _floats(args.x):
        rows.append(f"{x!r},{genfun.f_closed(m, x)!r},{series.partial_sum(x)!r},{genfun.tail_bound(x, args.K)!r}")
    _emit("\n".join(rows) + "\n", args.out)
    return EXIT_OK


def cmd_genfun_series(args) -> int:
    m = parse_measure_spec(args.p)
    series = genfun.f_series(m, args.K)
    rows = ["k,a_k"] + [f"{k},{v!r}" for k, v in enumerate(series.coefficients.tolist())]
    _emit("\n".join(rows) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------- check

def cmd_check_generator(args) -> int:
    p = make_preset(args.preset)
    lam = _floats(args.__dict__["lambda"])
    if len(lam) != 2:
        raise UsageError("--lambda takes two rates, e.g. 1,2")
    tf = make_domain_function(p.params, *lam)
    res = consistency_residuals(p.params, p.regime, tf, _ints(args.n))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "interior_max", "boundary_residual", "bound_interior", "pass"])
    for r in res:
        w.writerow([r.n, repr(r.interior_max), repr(r.boundary), repr(r.interior_bound), int(r.interior_ok)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK if all(r.interior_ok for r in res) else EXIT_FAIL


# ---------------------------------------------------------------- converge

_CONVERGE_KEYS = {"preset", "params", "regime", "x0", "t", "n", "paths", "seed", "statistic",
                  "n_ref", "max_stat", "kill_tol", "atom_tol"}


def _merge_config(args):
    """Flags override values from ``--config``."""
    file_vals = read_kv(args.config) if args.config else {}
    unknown = set(file_vals) - _CONVERGE_KEYS
    if unknown:
        raise UsageError(f"unknown config keys {sorted(unknown)}")
    for key, val in file_vals.items():
        if getattr(args, key, None) in (None, "auto"):
            setattr(args, key, val)
    return args


def cmd_converge(args) -> int:
    args = _merge_config(args)
    if args.seed is None:
        raise UsageError("--seed is required for converge")
    for key in ("t", "n", "paths"):
        if getattr(args, key) is None:
            raise UsageError(f"--{key} is required")
    params, regime = _params_and_regime(args)
    th = Thresholds(final_statistic=float(args.max_stat or 0.03),
                    kill_tolerance=float(args.kill_tol or 0.02),
                    atom_tolerance=float(args.atom_tol or 0.02))
    cfg = ExperimentConfig(x0=float(args.x0 or 0.0), t_list=_floats(args.t), n_list=_ints(args.n),
                           paths=int(args.paths), seed=int(args.seed), params=params,
                           regime=regime, statistic=args.statistic or "ks",
                           thresholds=th, n_ref=int(args.n_ref) if args.n_ref else None)
    report = run_convergence(cfg)
    _emit(report.to_csv(reproducible=args.reproducible), args.out)
    for name, ok in report.verdict.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------- occupation

def cmd_occupation(args) -> int:
    rows = occupation_scaling(args.preset, _ints(args.n), args.t, args.paths, args.seed)
    _emit(occupation_csv(rows, reproducible=args.reproducible), args.out)
    bad = [r for r in rows if not np.isnan(r.bound) and r.mean_visits > r.bound]
    return EXIT_FAIL if bad else EXIT_OK


# ---------------------------------------------------------------- parser

def _source(p, required_regime=True):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--preset", choices=PRESETS)
    g.add_argument("--params", help="key/value parameter file")
    if required_regime:
        p.add_argument("--regime", choices=("auto",) + REGIMES, default="auto")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fellerlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    meas = sub.add_parser("measure", help="jumping measures").add_subparsers(dest="action", required=True)
    b = meas.add_parser("build", help="build the n-th boundary measure")
    _source(b)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--out", default="-")
    b.add_argument("--auto-bump", action="store_true", help="raise n to the smallest admissible value")
    b.set_defaults(func=cmd_measure_build)

    s = sub.add_parser("simulate", help="simulate the rescaled walk and dump endpoints")
    _source(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--x0", type=float, default=0.0)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--paths", type=int, default=1000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", default="-")
    s.add_argument("--full-out", dest="full_out", help="also dump every (path_id, step, state)")
    s.set_defaults(func=cmd_simulate)

    gf = sub.add_parser("genfun", help="return generating function").add_subparsers(dest="action", required=True)
    e = gf.add_parser("eval", help="closed form F(x)")
    e.add_argument("--p", required=True, help='measure, e.g. "0:0.5,2:0.5" or "1:0.9,kill:0.1"')
    e.add_argument("--x", required=True, help="comma-separated points in [0,1)")
    e.set_defaults(func=cmd_genfun_eval)
    tb = gf.add_parser("table", help="closed form against the truncated series on a grid of x")
    tb.add_argument("--p", required=True)
    tb.add_argument("--x", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    tb.add_argument("--K", type=int, default=genfun.DEFAULT_TERMS)
    tb.add_argument("--out", default="-")
    tb.set_defaults(func=cmd_genfun_table)
    se = gf.add_parser("series", help="return probabilities a_0..a_K")
    se.add_argument("--p", required=True)
    se.add_argument("--K", type=int, default=genfun.DEFAULT_TERMS)
    se.add_argument("--out", default="-")
    se.set_defaults(func=cmd_genfun_series)

    ch = sub.add_parser("check", help="generator diagnostics").add_subparsers(dest="action", required=True)
    g = ch.add_parser("generator", help="interior and boundary residuals of the scaled generator")
    g.add_argument("--preset", choices=PRESETS, required=True)
    g.add_argument("--n", default="10,100,1000")
    g.add_argument("--lambda", default="1,2")
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_check_generator)

    c = sub.add_parser("converge", help="marginal-law convergence experiment")
    _source(c)
    c.add_argument("--config", help="key/value file; flags take precedence")
    c.add_argument("--x0", type=float)
    c.add_argument("--t", help="comma-separated times")
    c.add_argument("--n", help="comma-separated, strictly increasing")
    c.add_argument("--paths", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--statistic", choices=STATISTICS)
    c.add_argument("--n-ref", dest="n_ref", type=int)
    c.add_argument("--max-stat", dest="max_stat", type=float)
    c.add_argument("--kill-tol", dest="kill_tol", type=float)
    c.add_argument("--atom-tol", dest="atom_tol", type=float)
    c.add_argument("--out", default="-")
    c.add_argument("--reproducible", action="store_true", help="omit the timestamp header field")
    c.set_defaults(func=cmd_converge)

    o = sub.add_parser("occupation", help="expected visits to 0 against the occupation bound")
    o.add_argument("--preset", choices=PRESETS, required=True)
    o.add_argument("--n", default="10,100")
    o.add_argument("--t", type=float, default=1.0)
    o.add_argument("--paths", type=int, default=20000)
    o.add_argument("--seed", type=int, required=True)
    o.add_argument("--out", default="-")
    o.add_argument("--reproducible", action="store_true")
    o.set_defaults(func=cmd_occupation)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, FellerLabError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
