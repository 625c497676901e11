"""Command-line entry point.

Usage:
    mpb-lab <preset> [--config FILE] [--seed S] [--symbols K]
                     [--trials T] [--out DIR]
    mpb-lab validate --config FILE
    mpb-lab oracle

Without --config each preset runs with its desk-scale defaults. The
command-line overrides win over both defaults and config-file values.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import harness, oracles


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpb-lab",
        description=(
            "Matrix-pair beamformer experiments on a synthetic multi-user "
            "CDMA array channel."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for preset in harness.PRESETS:
        p = sub.add_parser(preset, help=f"run the {preset} experiment")
        _add_run_args(p)

    validate = sub.add_parser("validate", help="check a config file and exit")
    validate.add_argument("--config", required=True, help="YAML experiment file")

    sub.add_parser(
        "oracle",
        help="print independently derived reference values and invariants",
    )
    return parser


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML experiment file")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--symbols", type=int, help="symbols per trial override")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials override")
    p.add_argument("--out", help="output directory override")


def _resolve_spec(args: argparse.Namespace) -> harness.ExperimentSpec:
    if args.config:
        spec = harness.load_config(args.config)
        if spec.preset != args.command:
            raise harness.ConfigError(
                f"config declares preset {spec.preset!r} but the "
                f"{args.command!r} command was invoked"
            )
    else:
        spec = harness.default_spec(args.command)
    if args.seed is not None:
        spec.seed = args.seed
    if args.symbols is not None:
        spec.symbols = args.symbols
    if args.trials is not None:
        spec.trials = args.trials
    if args.out is not None:
        spec.output_dir = args.out
    spec.validate()
    return spec


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "oracle":
        for name, value in oracles.run_all().items():
            print(f"{name}: {value}")
        return 0

    if args.command == "validate":
        try:
            spec = harness.load_config(args.config)
        except harness.ConfigError as exc:
            print(f"INVALID: {exc}", file=sys.stderr)
            return 1
        print(
            f"OK: preset={spec.preset} seed={spec.seed} symbols={spec.symbols} "
            f"trials={spec.trials} schemes={','.join(spec.schemes)} "
            f"out={spec.output_dir}"
        )
        return 0

    try:
        spec = _resolve_spec(args)
    except harness.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    started = time.time()
    print(
        f"running {spec.preset}: seed={spec.seed} symbols={spec.symbols} "
        f"trials={spec.trials} schemes={','.join(spec.schemes)}"
    )
    result = harness.run_preset(spec)
    path = harness.write_result(result, spec.output_dir)
    elapsed = time.time() - started
    print(f"wrote {path} ({len(result.rows)} rows) in {elapsed:.1f}s")
    for name in result.patterns:
        print(f"wrote {path.parent / f'patterns_{name}.csv'}")
    for key, value in sorted(result.metadata.items()):
        if key.startswith(("entry_", "convergence_", "crossover", "gamma1")):
            print(f"  {key} = {value}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
