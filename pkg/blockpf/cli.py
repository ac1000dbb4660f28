"""
Command-line interface for the blockpf experiment harness.

    blockpf run --config config/experiments/table2.cfg [--seed N] [--runs N] [--out PATH]
    blockpf list-experiments [--dir PATH]
    blockpf describe --config PATH

Exit codes: 0 success, 2 invalid configuration, 3 I/O error.
"""

import argparse
import logging
import sys
from typing import List, Optional

from blockpf import __version__
from blockpf.core.config import get_settings
from blockpf.core.exceptions import ConfigError
from blockpf.services.harness import describe_grid, run_table
from blockpf.utils.config_loader import list_experiments, load_experiment
from blockpf.utils.logger import add_context_to_logger, get_logger, setup_logging

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

logger = get_logger("cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockpf",
        description="Block-adaptive bootstrap particle filter experiments",
    )
    parser.add_argument("--version", action="version", version=f"blockpf {__version__}")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment and write its CSV table")
    run.add_argument("--config", required=True, help="Experiment recipe (.cfg)")
    run.add_argument("--seed", type=int, help="Override the base seed")
    run.add_argument("--runs", type=int, help="Override the replicate count")
    run.add_argument("--out", help="Output CSV path")
    run.add_argument("--workers", type=int, help="Replicate worker processes")

    listing = sub.add_parser("list-experiments", help="List bundled experiment recipes")
    listing.add_argument("--dir", help="Recipe directory")

    describe = sub.add_parser("describe", help="Print the resolved grid of an experiment")
    describe.add_argument("--config", required=True, help="Experiment recipe (.cfg)")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    settings = get_settings()
    if args.workers is not None:
        settings = settings.model_copy(update={"WORKERS": max(1, args.workers)})
    config = load_experiment(args.config, {"seed": args.seed, "runs": args.runs})
    context = add_context_to_logger(logging.getLogger("blockpf"), experiment=config.name, seed=config.seed)
    try:
        path = run_table(config, settings, args.out)
    finally:
        logging.getLogger("blockpf").removeFilter(context)
    print(path)
    return EXIT_OK


def _cmd_list(args: argparse.Namespace) -> int:
    directory = args.dir or get_settings().experiments_path
    for name, description, path in list_experiments(directory):
        print(f"{name:<14} {path}  {description}")
    return EXIT_OK


def _cmd_describe(args: argparse.Namespace) -> int:
    info = describe_grid(load_experiment(args.config))
    for key in ("name", "description", "model", "model_params", "mode", "T", "runs", "seed", "metrics"):
        print(f"{key}: {info[key]}")
    print(f"cells: {len(info['cells'])}")
    for cell in info["cells"]:
        print(f"  M={cell['M']} K={cell['K']} W={cell['W']}")
    print(f"rows: {info['rows']}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "list-experiments": _cmd_list,
    "describe": _cmd_describe,
}


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    setup_logging(
        log_level="DEBUG" if args.debug else settings.LOG_LEVEL,
        log_dir=settings.LOG_DIR,
        log_to_file=settings.LOG_TO_FILE,
        json_format=settings.LOG_JSON,
    )

    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
