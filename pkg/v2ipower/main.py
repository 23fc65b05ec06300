"""Command line runner.

  v2ipower                                   Scenario A, 72 km/h, optimized
  v2ipower --scenario C --speed-kmh 108      another scenario and speed
  v2ipower --compare --realizations 20       optimized plus the fixed baselines
  v2ipower --config run.toml --out results   settings from a TOML file
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from . import __version__
from .config import ConfigError, ExperimentSpec, load_config, validate
from .console import StatusPrinter
from .outputs import emit_outputs
from .sim import MonteCarloSummary, run_monte_carlo


def _baseline_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated dB values, got {text!r}"
        ) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2ipower",
        description="Two-loop utility-maximizing power control for V2I uplinks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  v2ipower --scenario B --speed-kmh 90
  v2ipower --compare --baseline-db 5,7,9,11 --realizations 100 --out results
  v2ipower --baseline-db 9             run only the fixed 9 dB objective
""",
    )
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--scenario", choices=["A", "B", "C"], help="mobility scenario")
    parser.add_argument("--speed-kmh", type=float, help="OBU speed in km/h")
    parser.add_argument(
        "--baseline-db",
        type=_baseline_list,
        help="fixed objective SINRs in dB (comma-separated)",
    )
    parser.add_argument("--realizations", type=int, help="Monte Carlo realizations")
    parser.add_argument("--seed", type=int, help="base seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--compare",
        action="store_true",
        help="run the optimizer and every baseline on shared seeds",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )
    parser.add_argument("--version", action="version", version=__version__)
    return parser


def apply_overrides(spec: ExperimentSpec, args: argparse.Namespace) -> ExperimentSpec:
    """Command line flags on top of the file (or default) configuration."""
    sc = spec.sim.scenario
    if args.scenario is not None:
        sc.kind = args.scenario
    if args.speed_kmh is not None:
        sc.speed_kmh = args.speed_kmh
    if args.realizations is not None:
        sc.realizations = args.realizations
    if args.seed is not None:
        sc.base_seed = args.seed
    if args.baseline_db is not None:
        sc.baselines_db = tuple(args.baseline_db)
        spec.output.baselines_only = True
    if args.out is not None:
        spec.output.directory = args.out
    if args.compare:
        spec.output.compare = True
    spec.output.verbosity = max(spec.output.verbosity, args.verbose)
    return validate(spec)


def run(
    spec: ExperimentSpec, printer: Optional[StatusPrinter] = None
) -> List[MonteCarloSummary]:
    """Monte Carlo batch of every arm selected by ``spec``."""
    printer = printer or StatusPrinter(quiet=True)
    summaries = []
    for n, arm in enumerate(spec.arms()):
        sc = arm.scenario
        printer.arm_started(sc.arm_name, sc.kind, sc.speed_kmh, sc.realizations)
        summaries.append(
            run_monte_carlo(
                arm,
                keep_traces=n == 0 and spec.output.traces,
                on_realization=printer.realization_done,
            )
        )
    return summaries


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns 0 on success, 2 on config errors, 1 on I/O errors."""
    args = build_parser().parse_args(argv)
    printer = StatusPrinter()
    try:
        spec = load_config(args.config) if args.config else ExperimentSpec()
        spec = apply_overrides(spec, args)
        _configure_logging(spec.output.verbosity)
        summaries = run(spec, printer)
        emit_outputs(summaries, spec)
    except ConfigError as exc:
        printer.error(str(exc))
        return 2
    except OSError as exc:
        printer.error(str(exc))
        return 1
    printer.summary_table(summaries)
    return 0


if __name__ == "__main__":
    sys.exit(main())
