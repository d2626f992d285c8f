"""
Command-line entry point.

    conewave <scenario> --config FILE [--out DIR] [--k-max N] [--points-per-decade N] [--jobs N]
    conewave selftest [module] [--out DIR]

Exit codes: 0 when every verdict passes, 1 on any FAIL or UNCONVERGED verdict
(or a numerical error), 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from conewave import settings
from conewave.config import load_config
from conewave.errors import ConeWaveError
from conewave.experiments import RUNNERS, run_scenario
from conewave.report import emit_report, exit_code_for, summary_lines
from conewave.selftest import SUITES, run_selftest

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conewave",
        description="Wave equations on metric cones: spectral evolution and estimate checks.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--out", default=None, help="report directory (overrides the config)")
        p.add_argument("--k-max", type=int, default=None, help="eigenspace cut for the cross-section")
        p.add_argument("--points-per-decade", type=float, default=None, help="radial grid density")
        p.add_argument("--jobs", type=int, default=None, help="worker threads for the sweep")
    p = sub.add_parser("selftest", help="run the built-in property checks")
    p.add_argument("module", nargs="?", choices=sorted(SUITES), default=None)
    p.add_argument("--out", default=None, help="report directory")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "cross_section": {"k_max": args.k_max},
        "grid": {"points_per_decade": args.points_per_decade},
        "jobs": args.jobs,
    }


def run(args: argparse.Namespace) -> int:
    if args.scenario == "selftest":
        tables = run_selftest(args.module)
        out = args.out or settings.OUTPUT_DIR
    else:
        config = load_config(args.config, _overrides(args))
        tables = run_scenario(config)
        out = args.out or config.output or settings.OUTPUT_DIR
    emit_report(tables, out)
    for line in summary_lines(tables):
        print(line)
    return exit_code_for(tables)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=settings.LOG_LEVEL)
    try:
        return run(args)
    except ConeWaveError as exc:
        logger.debug("run aborted", exc_info=True)
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
