"""Command-line experiment runner.

    obs-gprm-sim run --scenario <file> [--out-dir <dir>] [--trace]
                     [--util-mode all|delivered] [--seed-override <n>]
                     [--policy sp|gprm|both]
    obs-gprm-sim validate --scenario <file>

Progress goes to stderr; data only to files. OBS_SIM_THREADS caps the
worker pool.
"""

import argparse
import sys

from .experiment import ScenarioError, parse_scenario, run_experiment, validate


def _log(msg):
    print(msg, file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(prog="obs-gprm-sim",
                                     description="OBS network simulator with "
                                                 "adaptive (GPRM) and min-hop routing")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a scenario sweep")
    run_p.add_argument("--scenario", required=True, help="scenario file")
    run_p.add_argument("--out-dir", default=".", help="directory for result files")
    run_p.add_argument("--trace", action="store_true", help="write per-run event traces")
    run_p.add_argument("--util-mode", choices=("all", "delivered"), default=None,
                       help="count all reserved occupancy or delivered bursts only")
    run_p.add_argument("--seed-override", type=int, default=None,
                       help="replace the scenario's seed list with one seed")
    run_p.add_argument("--policy", choices=("sp", "gprm", "both"), default=None,
                       help="restrict the sweep to one policy")
    val_p = sub.add_parser("validate", help="check a scenario file")
    val_p.add_argument("--scenario", required=True, help="scenario file")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        scenario = parse_scenario(args.scenario)
    except ScenarioError as exc:
        for err in exc.errors:
            _log(f"error: {err}")
        return 2
    except OSError as exc:
        _log(f"error: cannot read scenario: {exc}")
        return 2
    if args.command == "validate":
        errors = validate(scenario)
        if errors:
            for err in errors:
                _log(f"error: {err}")
            return 2
        _log("scenario ok")
        return 0
    try:
        run_experiment(scenario, out_dir=args.out_dir, trace=args.trace,
                       policy=args.policy, seed_override=args.seed_override,
                       util_mode=args.util_mode, log=_log)
    except ScenarioError as exc:
        for err in exc.errors:
            _log(f"error: {err}")
        return 2
    except Exception as exc:  # a failed run must not exit 0
        _log(f"error: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
