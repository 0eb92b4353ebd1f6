"""Command-line entry point: ``moisture-fvm <command> [options]``."""

import argparse
import logging
import sys

from .harness import STAGES, ExperimentConfig, run_full_pipeline

COMMANDS = {
    "solve": ("solve",),
    "refine": ("refine",),
    "estimates": ("estimates",),
    "residual": ("residual",),
    "dual": ("dual",),
    "pipeline": STAGES,
}

log = logging.getLogger("moisture_fvm")


def build_parser():
    parser = argparse.ArgumentParser(prog="moisture-fvm", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; defaults are used for missing keys")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--level-cap", type=int, default=None, help="drop grid levels above this (default 1024)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    common.add_argument(
        "--debug-adversarial",
        action="store_true",
        help="add a time-reversed trajectory to the energy check; the run must then fail",
    )
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} stage" if name != "pipeline" else "run every stage")
    return parser


def load_config(args):
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    return cfg.with_updates(output_dir=args.out, level_cap=args.level_cap, seed=args.seed)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    status, manifest = run_full_pipeline(cfg, stages=COMMANDS[args.command], debug_adversarial=args.debug_adversarial)
    for stage, state in manifest["stages"].items():
        log.info("%s: %s (%.2fs)", stage, state, manifest["timings"][stage])
    for name in manifest["reports"]["failed"] + manifest["failed_verdicts"]:
        print(f"FAIL {name}", file=sys.stderr)
    print(f"{'PASS' if status == 0 else 'FAIL'}: wrote {', '.join(manifest['files'])} to {cfg.output_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
