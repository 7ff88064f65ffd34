import argparse
import importlib
import logging
import pkgutil
import sys

import colorlog

from . import LOG_LEVEL, __version__
from .extensions import error_handler as error

EXTENSIONS_PACKAGE = "boost.agb.extensions"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def setup_logging(level: str = LOG_LEVEL) -> None:
    """
    Send every log record to stderr through a colored formatter.

    Raises:
        error.InvalidConfigError: If the level is not one of `LOG_LEVELS`.
    """
    if level not in LOG_LEVELS:
        raise error.InvalidConfigError(
            f"Unknown log level {level!r}, expected one of {', '.join(LOG_LEVELS)}."
        )
    handler = colorlog.StreamHandler(sys.stderr)
    handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s%(levelname)-8s%(reset)s %(blue)s%(name)s%(reset)s: %(message)s"
        )
    )
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level)


def load_extensions_from(subparsers: argparse._SubParsersAction, package: str = EXTENSIONS_PACKAGE) -> list[str]:
    """
    Load every command module of a package.

    Modules starting with `_` are helpers and are skipped. A command module
    registers itself through its `load(subparsers)` function.

    Returns:
        list[str]: Names of the loaded modules.
    """
    module = importlib.import_module(package)
    loaded = []
    for info in sorted(pkgutil.iter_modules(module.__path__), key=lambda i: i.name):
        if info.name.startswith("_"):
            continue
        extension = importlib.import_module(f"{package}.{info.name}")
        if hasattr(extension, "load"):
            extension.load(subparsers)
            loaded.append(info.name)
    return loaded


def build_app() -> argparse.ArgumentParser:
    """The argument parser with every command loaded."""
    app = argparse.ArgumentParser(
        prog="agb",
        description="Gradient boosting and Nesterov-accelerated gradient boosting.",
    )
    app.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    app.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        default=LOG_LEVEL,
        help="Log level (default from AGB_LOG_LEVEL).",
    )
    subparsers = app.add_subparsers(dest="command", required=True, metavar="COMMAND")
    load_extensions_from(subparsers)
    return app


def run(argv: list[str] | None = None) -> int:
    """Parse the command line, run the command and return its exit code."""
    app = build_app()
    args = app.parse_args(argv)

    try:
        setup_logging(args.log_level)
        return args.handler(args) or 0
    except Exception as e:
        return error.handle(e, args.command)
