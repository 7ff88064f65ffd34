"""
This module manages the command for running a benchmark grid.
"""
import argparse

from boost.agb.benchmark import BenchConfig, run_benchmark


def benchmark_cmd(args: argparse.Namespace) -> int:
    config = BenchConfig.from_file(args.config)
    report = run_benchmark(config, workers=args.workers)
    print(f"{len(report.runs)} runs, {len(report.failures)} failures -> {report.directory}")
    return 0


def load(subparsers) -> None:
    parser = subparsers.add_parser("benchmark", help="Run a GB/AGB benchmark grid from a YAML config.")
    parser.add_argument("--config", required=True)
    parser.add_argument("--workers", type=int, default=None, help="Overrides the config's worker count.")
    parser.set_defaults(handler=benchmark_cmd)
