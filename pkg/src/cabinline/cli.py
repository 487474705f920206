"""Command-line interface: ``stability``, ``control``, ``simulate``, ``compare``.

Exit codes: 0 success, 2 validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .control import ControlInput, Gamora, NoControl, Static, decide, gamora, parse_policy
from .experiment import compare_controllers, run_many
from .io import load_line_config, load_rate_profile, write_stats, write_trace
from .model import ValidationError, validate
from .sim import SimParams
from .stability import stability
from .stats import DEFAULT_BIN_WIDTH_S, aggregate_runs

log = logging.getLogger("cabinline")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3


def _jnum(x):
    """JSON-safe number: infinities become the string ``"inf"``."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _load(args, need_profile=True):
    config = load_line_config(args.config)
    profile = None
    if need_profile or getattr(args, "profile", None):
        if not args.profile:
            raise ValidationError(["--profile is required"])
        profile = load_rate_profile(args.profile, config.n_stations)
        validate(config, profile)
    return config, profile


def _horizon(args, profile) -> float:
    if args.horizon_s is not None:
        return float(args.horizon_s)
    end = float(profile.breakpoints[-1])
    if end <= 0:
        raise ValidationError(["profile has a single row at t=0; pass --horizon-s"])
    return end


def _fresh_outdir(path: Path, force: bool) -> Path:
    if path.exists() and any(path.iterdir()):
        if not force:
            raise ValidationError([f"output directory {path} is not empty (use --force)"])
        for p in sorted(path.rglob("*"), reverse=True):
            p.rmdir() if p.is_dir() else p.unlink()
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_stability(args) -> int:
    config, profile = _load(args, need_profile=False)
    if args.nu:
        lam = [float(x) for x in args.nu.split(",")]
    elif profile is not None:
        lam = list(profile.rate_at(args.at_time_s))
    else:
        raise ValidationError(["pass --nu or --profile"])
    if len(lam) != config.n_stations:
        raise ValidationError([f"need {config.n_stations} rates, got {len(lam)}"])
    total = sum(lam)
    if not total > 0:
        raise ValidationError(["arrival rates sum to zero; thresholds undefined"])
    nu = [x / total for x in lam]
    th = stability(config.r0_mean, nu, config.sigmas, config.beta, config.gamma)
    dec = gamora(ControlInput(config.r0_mean, tuple(nu), config.sigmas, config.beta,
                              config.gamma))
    if args.json:
        print(json.dumps({
            "stations": list(config.names),
            "nu": nu,
            "thresholds": [_jnum(v) for v in th.values],
            "degenerate": list(th.degenerate),
            "blocks": list(dec.blocks.b),
            "block_thresholds": [_jnum(v) for v in dec.thresholds],
        }, indent=2))
        return EXIT_OK
    print(f"{'station':>8}  {'name':<12} {'nu':>8}  {'threshold (pax/s)':>18}")
    for m, (name, v, t) in enumerate(zip(config.names, nu, th.values), start=1):
        print(f"{m:>8}  {name:<12} {v:>8.4f}  {t:>18.6g}")
    print(f"blocks b = {list(dec.blocks.b)}")
    print("block thresholds = [" + ", ".join(f"{t:.6g}" for t in dec.thresholds) + "]")
    return EXIT_OK


def cmd_control(args) -> int:
    config, _ = _load(args, need_profile=False)
    state = json.loads(Path(args.state).read_text())
    M = config.n_stations
    queues = state.get("queues", [0] * M)
    lam = state.get("lambda")
    sigma = state.get("sigma", list(config.sigmas))
    r0 = state.get("r0", config.r0_mean)
    problems = []
    if lam is None:
        problems.append("state file needs 'lambda'")
    for key, vec in (("queues", queues), ("lambda", lam), ("sigma", sigma)):
        if vec is not None and len(vec) != M:
            problems.append(f"state '{key}' has {len(vec)} entries, line has {M}")
        elif vec is not None and any(x < 0 for x in vec):
            problems.append(f"state '{key}' has negative entries")
    if problems:
        raise ValidationError(problems)
    policy = parse_policy(args.controller, config.gamma, M)
    dec = decide(policy, queues, lam, sigma, r0, config)
    if args.json:
        out = {"controller": policy.name, "eta": list(dec.eta), "fallback": dec.fallback}
        if dec.blocks is not None:
            out["blocks"] = list(dec.blocks.b)
            out["block_thresholds"] = [_jnum(v) for v in dec.thresholds]
        print(json.dumps(out, indent=2))
    else:
        print("eta = [" + ", ".join(str(e) for e in dec.eta) + "]")
        if dec.blocks is not None:
            print(f"blocks b = {list(dec.blocks.b)}")
            print("block thresholds = [" + ", ".join(f"{t:.6g}" for t in dec.thresholds) + "]")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config, profile = _load(args)
    policy = parse_policy(args.controller, config.gamma, config.n_stations)
    if args.runs < 1:
        raise ValidationError(["--runs must be >= 1"])
    horizon = _horizon(args, profile)
    out = _fresh_outdir(Path(args.out), args.force)
    params = SimParams(horizon, 0, policy, args.estimate_lambda, args.estimate_sigma)
    traces = run_many(config, profile, params, args.runs, args.seed, args.jobs)
    stats = aggregate_runs(traces, args.bin_width_s)
    write_stats(stats, out)
    runs_dir = out / "runs"
    runs_dir.mkdir()
    for i, tr in enumerate(traces):
        write_trace(tr, runs_dir, f"run_{i:03d}")
    (out / "experiment.json").write_text(json.dumps({
        "config": str(args.config),
        "profile": str(args.profile),
        "controller": policy.name,
        "runs": args.runs,
        "seed": args.seed,
        "horizon_s": horizon,
        "bin_width_s": args.bin_width_s,
        "estimate_lambda": args.estimate_lambda,
        "estimate_sigma": args.estimate_sigma,
    }, indent=2) + "\n")
    print(f"wrote {args.runs} run(s) to {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config, profile = _load(args)
    horizon = _horizon(args, profile)
    statics = None
    if args.static:
        statics = [parse_policy("static:" + s, config.gamma, config.n_stations)
                   for s in args.static]
    cmp = compare_controllers(config, profile, horizon, args.runs, args.seed, statics,
                              args.bin_width_s, args.estimate_lambda, args.estimate_sigma,
                              args.jobs)
    result = cmp.to_dict()
    if args.out:
        out = _fresh_outdir(Path(args.out), args.force)
        (out / "compare.json").write_text(json.dumps(result, indent=2) + "\n")
    if args.json:
        print(json.dumps(result, indent=2))
        return EXIT_OK
    names = list(config.names)
    print(f"{'controller':<16}" + "".join(f"{'W ' + n + ' (s)':>18}" for n in names)
          + f"{'J (s)':>14}")
    for c in cmp.controllers:
        row = "".join(f"{'absent':>18}" if np.isnan(w) else f"{w:>18.1f}" for w in c.mean_wait)
        j = "undefined" if np.isnan(c.mean_imbalance) else f"{c.mean_imbalance:.1f}"
        print(f"{c.name:<16}{row}{j:>14}")
    for name, (diff, upper, lower) in cmp.vs.items():
        verdict = "lower" if lower else "not significantly lower"
        print(f"J(gamora) - J({name}) = {diff:.1f} s (95% upper bound {upper:.1f}): {verdict}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cabinline", description="Cabin line access control: thresholds, boarding limits and simulation.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, profile_required):
        sp.add_argument("--config", required=True, help="line configuration file")
        sp.add_argument("--profile", required=profile_required, help="rate profile CSV")
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    def experiment(sp):
        sp.add_argument("--runs", type=int, default=35)
        sp.add_argument("--seed", type=int, default=0, help="master seed")
        sp.add_argument("--horizon-s", type=float, default=None,
                        help="simulated time (default: last profile breakpoint)")
        sp.add_argument("--bin-width-s", type=float, default=DEFAULT_BIN_WIDTH_S)
        sp.add_argument("--estimate-lambda", action="store_true",
                        help="Gamora uses estimated arrival rates (20 min window)")
        sp.add_argument("--estimate-sigma", action="store_true",
                        help="Gamora uses estimated leaving probabilities (4 min window)")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        sp.add_argument("--force", action="store_true",
                        help="clear a non-empty output directory first")

    sp = sub.add_parser("stability", help="scaled stability thresholds and block partition")
    common(sp, False)
    sp.add_argument("--nu", help="comma-separated arrival rates or fractions per station")
    sp.add_argument("--at-time-s", type=float, default=0.0,
                    help="profile time whose rates define nu")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("control", help="one-shot boarding limits from a state file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--state", required=True,
                    help="JSON with queues, lambda, optional sigma and r0")
    sp.add_argument("--controller", default="gamora")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_control)

    sp = sub.add_parser("simulate", help="seeded replications and binned statistics")
    common(sp, True)
    sp.add_argument("--controller", default="gamora")
    sp.add_argument("--out", required=True, help="output directory")
    experiment(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="no control vs static vs Gamora on the same seeds")
    common(sp, True)
    sp.add_argument("--static", action="append",
                    help="static eta list, e.g. 6,8 (repeatable; default reserve 1 and 2 seats)")
    sp.add_argument("--out", help="directory for compare.json")
    experiment(sp)
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        problems = getattr(exc, "problems", [str(exc)])
        for msg in problems:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.exception("runtime failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
