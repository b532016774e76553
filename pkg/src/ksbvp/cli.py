"""Command line front end: subcommands over a shared JSON config.

Every subcommand accepts --config FILE plus repeated --set key=value
dotted overrides, runs one pipeline through the experiment harness,
writes its reports under --out, and prints the summary JSON to stdout.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence
(including contour refinement failures), 4 accuracy warnings when
--strict is given.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from .errors import AccuracyWarning, ConfigurationError, DivergenceError, RefinementNeededError
from .harness import ExperimentConfig, apply_overrides, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_ACCURACY = 4


def _add_common(sub):
    sub.add_argument("--config", help="JSON experiment config")
    sub.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="dotted config override, repeatable")
    sub.add_argument("--out", help="output directory (config out_dir if omitted)")
    sub.add_argument("--strict", action="store_true",
                     help="escalate accuracy warnings to exit code 4")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ksbvp",
        description="quarter-plane solver for the dispersively perturbed "
                    "Kuramoto-Sivashinsky equation",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("solve", help="run the fixed-point solver over [0, T]")
    p.add_argument("--weighted", action="store_true",
                   help="single-window solve in the time-weighted norm")
    p.add_argument("--monitor-energy", action="store_true",
                   help="record the discrete energy ledger")
    _add_common(p)

    p = subs.add_parser("roots", help="characteristic root pairs along the contour")
    p.add_argument("--delta", type=float, help="third-order coefficient")
    p.add_argument("--rho-min", type=float, help="smallest rho node")
    p.add_argument("--rho-max", type=float, help="largest rho node")
    p.add_argument("--points", type=int, help="number of rho nodes")
    _add_common(p)

    p = subs.add_parser("compat", help="corner compatibility report for the data")
    _add_common(p)

    p = subs.add_parser("wbdr", help="boundary-driven field on a space-time lattice")
    _add_common(p)

    p = subs.add_parser("verify", help="estimate-ratio verification over an ensemble")
    p.add_argument("--samples", type=int, help="ensemble size")
    _add_common(p)

    p = subs.add_parser("oracle-compare",
                        help="solve and cross-check against the implicit oracle")
    _add_common(p)

    p = subs.add_parser("calibrate", help="measure the schedule constants")
    p.add_argument("--ensemble", type=int, help="calibration ensemble size")
    p.add_argument("--seed", type=int, help="calibration seed")
    _add_common(p)

    p = subs.add_parser("sweep", help="run the configured sweep entries concurrently")
    p.add_argument("--workers", type=int, help="concurrent solve count")
    _add_common(p)
    return parser


def _config_from_args(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    forced = {"pipeline": args.command}
    if args.out:
        forced["out_dir"] = args.out
    flag_map = {
        "weighted": "weighted",
        "monitor_energy": "monitor_energy",
        "delta": "delta",
        "points": "roots.points",
        "rho_min": "roots.rho_min",
        "rho_max": "roots.rho_max",
        "samples": "ensemble",
        "ensemble": "ensemble",
        "seed": "seed",
        "workers": "workers",
    }
    sets = []
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None and value is not False:
            sets.append(f"{key}={json.dumps(value)}")
    data = cfg.to_dict()
    data.update(forced)
    cfg = ExperimentConfig.from_dict(data)
    return apply_overrides(cfg, sets + list(args.overrides))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = run_experiment(cfg)
        except ConfigurationError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except (DivergenceError, RefinementNeededError) as exc:
            print(f"diverged: {exc}", file=sys.stderr)
            return EXIT_DIVERGED

    accuracy = [w for w in caught if issubclass(w.category, AccuracyWarning)]
    for w in accuracy:
        print(f"accuracy warning: {w.message}", file=sys.stderr)
    print(json.dumps(result["summary"], sort_keys=True, indent=2))
    if args.strict and accuracy:
        return EXIT_ACCURACY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
