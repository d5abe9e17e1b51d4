"""Command-line front end.

    bangoff optimize   --objective fidelity --T 0.2 --ns 1 --out pn.json
    bangoff sweep      --objective concurrence --t-min 0.05 --t-max 2 --t-step 0.05 --ns-max 3 --out c.csv
    bangoff critical   --which taumin
    bangoff trajectory --control pn.json --initial 00 --step 0.01 --out traj.csv

Exit status: 0 on success, 1 on a runtime error (bad bracket, unreadable
control file), 2 on a usage error, 3 when an optimiser convergence flag was
raised.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from . import controls, experiments
from .controls import ControlError
from .optimize import Objective, OptimizationConfig, optimize_switch_count, optimize_type
from .quantum import PSI_00, PSI_INITIAL, sample_trajectory

SEED_ENV = "BANGOFF_SEED"
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3

OBJECTIVES = {"fidelity": Objective.STATE_PREP, "concurrence": Objective.INCONCURRENCE}
TRAJECTORY_HEADER = [
    "t", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c", "re_d", "im_d",
    "x", "y", "z", "C1_sq", "C2_sq", "C3_sq", "concurrence",
]


class UsageError(Exception):
    pass


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value
    return parse


def _nonnegative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def _default_seed() -> int:
    try:
        return int(os.environ.get(SEED_ENV, "0"))
    except ValueError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bangoff", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default: ${SEED_ENV} or 0)")
    common.add_argument("--starts", type=_positive(int), default=100,
                        help="random starts per control type")
    common.add_argument("--threads", type=_positive(int), default=os.cpu_count() or 1)

    p = sub.add_parser("optimize", parents=[common], help="best control for one duration")
    p.add_argument("--objective", choices=sorted(OBJECTIVES), required=True)
    p.add_argument("--T", type=_positive(float), required=True, dest="T")
    p.add_argument("--ns", type=_nonnegative_int, required=True)
    p.add_argument("--type", dest="control_type", default=None,
                   help="optimise this control type only")
    p.add_argument("--symmetric", action="store_true",
                   help="tie durations palindromically (symmetric ansatz)")
    p.add_argument("--out", default=None, help="control file to write (JSON)")

    p = sub.add_parser("sweep", parents=[common], help="best cost over a duration grid")
    p.add_argument("--objective", choices=sorted(OBJECTIVES), required=True)
    p.add_argument("--t-min", type=_positive(float), required=True)
    p.add_argument("--t-max", type=_positive(float), required=True)
    p.add_argument("--t-step", type=_positive(float), required=True)
    p.add_argument("--ns-max", type=_nonnegative_int, required=True)
    p.add_argument("--gaps", action="store_true", help="add cost(ns) - cost(ns+1) column")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("critical", parents=[common], help="locate a critical duration")
    p.add_argument("--which", choices=sorted(experiments.CRITICAL_DEFAULTS), required=True)
    p.add_argument("--bracket", type=_positive(float), nargs=2, metavar=("LO", "HI"))
    p.add_argument("--precision", type=_positive(float), default=experiments.PRECISION)
    p.add_argument("--ns", type=_nonnegative_int, default=None, help="switch count (qsl, taumin)")
    p.add_argument("--eps", type=_positive(float), default=None, help="reach threshold (qsl, taumin)")
    p.add_argument("--threshold", type=_positive(float), default=None,
                   help="gap threshold (tc, tauc)")
    p.add_argument("--type", dest="control_type", default=None,
                   help="restrict qsl/taumin to one control type")
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--out", default=None)

    p = sub.add_parser("trajectory", help="sample the state along a control")
    p.add_argument("--control", required=True, help="control file (JSON)")
    p.add_argument("--initial", choices=["prep", "00"], required=True)
    p.add_argument("--step", type=_positive(float), required=True)
    p.add_argument("--out", required=True)
    return parser


def _config(args) -> OptimizationConfig:
    seed = _default_seed() if args.seed is None else args.seed
    return OptimizationConfig(n_starts=args.starts, seed=seed, workers=args.threads)


def cmd_optimize(args) -> int:
    kind = OBJECTIVES[args.objective]
    config = _config(args)
    if args.control_type is not None:
        ctype = args.control_type
        if len(ctype) - 1 != args.ns:
            raise UsageError(f"type {ctype!r} has {len(ctype) - 1} switches, not --ns {args.ns}")
        best = optimize_type(ctype, args.T, kind, config, symmetric=args.symmetric)
    else:
        best, _ = optimize_switch_count(args.ns, args.T, kind, config, symmetric=args.symmetric)
    partner = best.partner()
    report = {
        "objective": args.objective,
        "cost": best.best_cost,
        args.objective: 1.0 - best.best_cost,
        "converged": best.converged,
        "seed": config.seed,
        "starts": config.n_starts,
        "partner": {"type": partner.control_type, "durations": list(partner.best_durations)},
    }
    if args.out:
        controls.save(best.control, args.out, **report)
    print(f"{best.control}  cost={best.best_cost:.6e}  {args.objective}={1 - best.best_cost:.15f}")
    print(f"partner: {partner.control}")
    return 0 if best.converged else EXIT_NOT_CONVERGED


def cmd_sweep(args) -> int:
    grid = experiments.duration_grid(args.t_min, args.t_max, args.t_step)
    rows = experiments.sweep(OBJECTIVES[args.objective], grid, args.ns_max, _config(args))
    if args.out:
        experiments.write_sweep_csv(rows, args.out, gaps=args.gaps)
        print(f"wrote {len(rows)} rows for {len(grid)} durations to {args.out}")
    else:
        experiments.write_sweep_csv(rows, sys.stdout, gaps=args.gaps)
    return 0 if all(r.converged for r in rows) else EXIT_NOT_CONVERGED


def cmd_critical(args) -> int:
    est = experiments.locate(args.which, bracket=args.bracket, precision=args.precision,
                             config=_config(args), ns=args.ns, eps=args.eps,
                             threshold=args.threshold, control_type=args.control_type,
                             symmetric=args.symmetric)
    lo, hi = est.bracket
    print(f"{est.name} = {est.value!r}  bracket=({lo!r}, {hi!r})  "
          f"threshold={est.detector_threshold:g}  seed={est.seed}")
    if est.optimum is not None:
        print(f"optimum: {est.optimum.control}  cost={est.optimum.best_cost:.6e}")
    if args.out:
        experiments.write_critical(est, args.out)
    ok = est.converged and (est.optimum is None or est.optimum.converged)
    return 0 if ok else EXIT_NOT_CONVERGED


def cmd_trajectory(args) -> int:
    control = controls.load(args.control)
    initial = PSI_INITIAL if args.initial == "prep" else PSI_00
    samples = sample_trajectory(initial, control, args.step)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for s in samples:
            amps = [part for z in s.state for part in (z.real, z.imag)]
            bell = [abs(s.bell.c1) ** 2, abs(s.bell.c2) ** 2, abs(s.bell.c3) ** 2]
            w.writerow([repr(float(v)) for v in [s.time, *amps, *s.bloch, *bell, s.concurrence]])
    last = samples[-1]
    print(f"{len(samples)} samples; final bloch=({last.bloch.x:.3e}, {last.bloch.y:.3e}, "
          f"{last.bloch.z:.3e}) concurrence={last.concurrence:.12f}")
    return 0


COMMANDS = {
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "critical": cmd_critical,
    "trajectory": cmd_trajectory,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ControlError, experiments.BracketError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) and "empty grid" in str(exc) else EXIT_ERROR
