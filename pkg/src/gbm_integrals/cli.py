"""Command-line front end.

Every subcommand writes tidy records (CSV or JSON) to stdout or ``--output``.
Exit codes: 0 success, 1 internal error, 2 invalid arguments, 3 a
verification verdict failed.  Output bytes depend only on the arguments;
``--timestamps`` writes wall-clock times to stderr.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
import traceback
from typing import Optional, Sequence

from . import acceptance
from . import estimators as est
from .estimators import EstimateWithCI, MeasureFunction, MomentVariant, SamplingConfig
from .oracles import GammaLawSpec, default_horizon, dufresne_ks_check, yor_mc_check
from .paths import Scheme, simulate_batch
from .pricing import OptionSpec, canonicalize, price_check, price_direct
from .records import estimate_record, report_records, to_csv, to_json, value_record

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_FAILED = 0, 1, 2, 3
SUITES = ("dufresne", "yor", "supermartingale", "measure-change", "lower-tail", "all")


class UsageError(ValueError):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _finite(text):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
    return v


def _default_seed():
    env = os.environ.get("GBM_SEED")
    if env is None:
        return 0
    try:
        seed = int(env)
    except ValueError:
        raise UsageError(f"GBM_SEED must be an integer, got {env!r}")
    if seed < 0:
        raise UsageError("GBM_SEED must be nonnegative")
    return seed


def _common(p: argparse.ArgumentParser):
    p.add_argument("--n", type=_positive_int, help="number of samples")
    p.add_argument("--steps", type=_positive_int, default=2048, help="time steps per path")
    p.add_argument("--seed", type=int, help="master seed (default: $GBM_SEED or 0)")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.TRAPEZOID.value)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="output file (default: stdout)")
    p.add_argument("--config", help="flat JSON object of flag values; flags override it")
    p.add_argument("--timestamps", action="store_true", help="write start/end times to stderr")


def build_parser():
    parser = argparse.ArgumentParser(prog="gbm-integrals", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs = {}

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p)
        subs[name] = p
        return p

    p = add("simulate", "summary statistics of simulated path functionals")
    p.add_argument("--t", type=_finite)
    p.add_argument("--nu", type=_finite, default=0.0)
    p.add_argument("--y", type=_finite, help="also report the Girsanov state for this y")

    p = add("cdf", "distribution function, direct against identity")
    p.add_argument("--t", type=_finite)
    p.add_argument("--a", type=_finite, nargs="+")
    p.add_argument("--nu", type=_finite, default=0.0)

    p = add("density", "density of A_t by two representations")
    p.add_argument("--t", type=_finite)
    p.add_argument("--a", type=_finite, nargs="+")
    p.add_argument("--mass", action="store_true", help="also integrate the density over [0.01, 20]")

    p = add("moment", "exponential moments with divergence diagnostics")
    p.add_argument("--t", type=_finite)
    p.add_argument("--theta", type=_finite, nargs="+")
    p.add_argument("--variant", choices=[v.value for v in MomentVariant], default=MomentVariant.NO_DRIFT.value)

    p = add("price", "Asian call price, direct against identity")
    p.add_argument("--strike", type=_finite, nargs="+")
    p.add_argument("--t", type=_finite)
    p.add_argument("--nu", type=_finite, default=0.0)
    p.add_argument("--sigma", type=_finite, default=1.0)

    p = add("verify", "oracle and identity suites")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--mu", type=_finite, default=2.0)
    p.add_argument("--T", type=_finite, help="truncation horizon (default: chosen from the allowance)")
    p.add_argument("--u", type=_finite, nargs="+", default=[0.0, 1.0])
    p.add_argument("--t", type=_finite, nargs="+", default=[1.0])
    p.add_argument("--y", type=_finite, nargs="+", default=[1.0])
    p.add_argument("--f", choices=[f.value for f in MeasureFunction], nargs="+",
                   default=[f.value for f in MeasureFunction])
    p.add_argument("--a", type=_finite, nargs="+", help="decreasing grid for the lower-tail probe")

    p = add("report", "run the acceptance grid and emit a summary table")
    p.add_argument("--criteria", type=int, nargs="+", default=sorted(acceptance.CRITERIA))

    return parser, subs


def _load_config(path, subparser):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise UsageError("config must be a flat JSON object")
    known = {a.dest for a in subparser._actions} - {"help", "config"}
    for key, value in data.items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(value, dict):
            raise UsageError(f"config value for {key!r} must be flat")
    return data


def parse(argv: Sequence[str]):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)
    if args.config:
        sp = subs[args.command]
        sp.set_defaults(**_load_config(args.config, sp))
        args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = _default_seed()
    if args.seed < 0:
        raise UsageError("seed must be nonnegative")
    if args.n is not None and (int(args.n) != args.n or args.n < 1):
        raise UsageError(f"n must be >= 1, got {args.n}")
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name} is required for {args.command}")


def _sampling(args) -> SamplingConfig:
    return SamplingConfig(steps=args.steps, seed=args.seed, scheme=args.scheme, threads=args.threads)


def _n(args, default):
    return default if args.n is None else args.n


# ------------------------------------------------------------------ commands


def cmd_simulate(args):
    _require(args, "t")
    cfg = _sampling(args)
    n = _n(args, 1000)
    drifts = (args.nu,)
    b = simulate_batch(args.t, n, steps=cfg.steps, seed=cfg.seed, stream=cfg.stream, scheme=cfg.scheme,
                       drifts=drifts, threads=cfg.threads)
    common = dict(t=args.t, nu=args.nu)
    records = [
        estimate_record("brownian_terminal", EstimateWithCI.from_samples(b.terminal_log), **common),
        estimate_record("martingale", EstimateWithCI.from_samples(b.martingale), **common),
        estimate_record("integral", EstimateWithCI.from_samples(b.integral(args.nu)), **common),
        estimate_record("ratio", EstimateWithCI.from_samples(b.ratio), **common),
    ]
    if args.y is not None:
        y = est._positive("y", args.y)
        area = b.integral(0.0)
        alive = area < 2.0 / y
        records.append(estimate_record("blown", EstimateWithCI.from_samples(~alive), t=args.t, a=2.0 / y))
        if alive.any():
            state = -b.martingale[alive] / (1.0 / y - 0.5 * area[alive])
            records.append(estimate_record("girsanov_state", EstimateWithCI.from_samples(state),
                                           t=args.t, a=2.0 / y))
    return records, {"records": records}, True


def cmd_cdf(args):
    _require(args, "t", "a")
    cfg = _sampling(args)
    n = _n(args, 100_000)
    reports = [est.cdf_check(args.t, a, args.nu, n, cfg) for a in args.a]
    rhs_id = "cdf_identity" if args.nu == 0 else "cdf_identity_drift"
    records = [r for rep in reports for r in report_records(rep, "cdf_direct", rhs_id)]
    return records, {"records": records, "reports": reports}, all(r.passed for r in reports)


def cmd_density(args):
    _require(args, "t", "a")
    cfg = _sampling(args)
    n = _n(args, 100_000)
    reports = [est.density_check(args.t, a, n, cfg) for a in args.a]
    records = [r for rep in reports for r in report_records(rep, "density_event", "density_difference")]
    payload = {"records": records, "reports": reports}
    if args.mass:
        mass = est.density_mass(args.t, est.log_grid(), n, cfg)
        records.append(value_record("density_mass", mass, t=args.t, n=n))
        payload["mass"] = mass
    return records, payload, all(r.passed for r in reports)


def cmd_moment(args):
    _require(args, "t", "theta")
    cfg = _sampling(args)
    n = _n(args, 2**20)
    results = [est.exp_moment(args.t, th, args.variant, n, cfg) for th in args.theta]
    records = []
    for m in results:
        records.append(estimate_record(f"exp_moment_theta_{m.theta:g}", m.estimate, t=args.t,
                                       passed=not m.diverging))
        records.append(value_record(f"tail_index_theta_{m.theta:g}", m.tail_index, t=args.t, n=n))
    # a divergence verdict is a finding, not a failed verification
    return records, {"records": records, "moments": results}, True


def cmd_price(args):
    _require(args, "strike", "t")
    cfg = _sampling(args)
    n = _n(args, 100_000)
    records, reports = [], []
    for strike in args.strike:
        spec = OptionSpec(strike, args.t, args.nu, args.sigma)
        if canonicalize(spec).spec.drift == 0:
            rep = price_check(spec, n, cfg)
            reports.append(rep)
            records += report_records(rep, "price_direct", "price_identity")
        else:
            e = price_direct(spec, n, cfg)
            records.append(estimate_record("price_direct", e, t=args.t, a=strike, nu=args.nu))
    return records, {"records": records, "reports": reports}, all(r.passed for r in reports)


def _verify_dufresne(args, cfg, n):
    spec = GammaLawSpec(args.mu)
    horizon = args.T if args.T is not None else default_horizon(spec)
    res = dufresne_ks_check(spec, horizon, n, cfg)
    recs = [value_record("dufresne_ks", res.statistic, t=horizon, n=res.n, passed=res.passed),
            value_record("dufresne_ks_threshold", res.threshold, t=horizon, n=res.n)]
    return recs, [res], res.passed


def _verify_yor(args, cfg, n):
    reps = [yor_mc_check(u, t, n, cfg) for u in args.u for t in args.t]
    recs = [r for rep in reps for r in report_records(rep, "yor_simulated", "yor_closed_form")]
    return recs, reps, all(r.passed for r in reps)


def _verify_supermartingale(args, cfg, n):
    results = [est.supermartingale_check(y, args.t, n, cfg) for y in args.y]
    recs = [r for res in results for rep in res.reports
            for r in report_records(rep, "supermartingale_mean", "supermartingale_cdf")]
    return recs, results, all(r.passed for r in results)


def _verify_measure(args, cfg, n):
    reps = [est.measure_change_check(t, y, f, n, cfg, nu=0.5)
            for t in args.t for y in args.y for f in args.f]
    recs = []
    for rep in reps:
        recs += report_records(rep, f"{rep.identity_id}_lhs", f"{rep.identity_id}_rhs")
    return recs, reps, all(r.passed for r in reps)


def _verify_lower_tail(args, cfg, n):
    grid = args.a or [0.5, 0.4, 0.3, 0.25, 0.2, 0.15]
    probes = [est.lower_tail_probe(t, grid, n, cfg) for t in args.t]
    recs = []
    for p in probes:
        for row in p.rows:
            recs.append({"id": "lower_tail", "t": p.t, "a": row.a, "nu": 0.5, "n": n,
                         "estimate": row.value, "stderr": row.stderr, "trimmed": None,
                         "max_sample": None, "z": None, "pass": not row.censored})
    return recs, probes, all(p.nondecreasing for p in probes)


_SUITE_RUNNERS = {
    "dufresne": _verify_dufresne,
    "yor": _verify_yor,
    "supermartingale": _verify_supermartingale,
    "measure-change": _verify_measure,
    "lower-tail": _verify_lower_tail,
}


def cmd_verify(args):
    cfg = _sampling(args)
    n = _n(args, 100_000)
    suites = list(_SUITE_RUNNERS) if args.suite == "all" else [args.suite]
    records, payload, ok = [], {}, True
    for name in suites:
        recs, results, passed = _SUITE_RUNNERS[name](args, cfg, n)
        records += recs
        payload[name] = {"passed": passed, "results": results}
        ok = ok and passed
    payload["records"] = records
    return records, payload, ok


def cmd_report(args):
    unknown = [c for c in args.criteria if c not in acceptance.CRITERIA]
    if unknown:
        raise UsageError(f"unknown criteria {unknown}; choose from 1-{len(acceptance.CRITERIA)}")
    records, results = [], []
    for c in args.criteria:
        kwargs = dict(seed=args.seed, threads=args.threads)
        if args.n is not None:
            kwargs["n"] = args.n
        res = acceptance.CRITERIA[c](**kwargs)
        print(res.line(), file=sys.stderr, flush=True)
        results.append(res)
        records += res.records
    summary = [{"criterion": r.number, "name": r.name, "passed": r.passed, "notes": r.notes} for r in results]
    return records, {"records": records, "criteria": summary}, all(r.passed for r in results)


COMMANDS = {
    "simulate": cmd_simulate,
    "cdf": cmd_cdf,
    "density": cmd_density,
    "moment": cmd_moment,
    "price": cmd_price,
    "verify": cmd_verify,
    "report": cmd_report,
}


def _emit(text: str, output: Optional[str]):
    if output:
        with open(output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _stamp(label):
    now = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    print(f"{label} {now}", file=sys.stderr)


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"gbm-integrals: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.timestamps:
        _stamp("start")
    try:
        records, payload, passed = COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"gbm-integrals: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc(file=sys.stderr)
        return EXIT_INTERNAL
    text = to_csv(records) if args.format == "csv" else to_json(payload)
    try:
        _emit(text, args.output)
    except OSError as exc:
        print(f"gbm-integrals: error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.timestamps:
        _stamp("end")
    return EXIT_OK if passed else EXIT_FAILED


def main() -> None:
    sys.exit(run())
