"""
This module is used to handle errors in the program.

Library code only raises the errors below. The command line turns them into a
one-line diagnostic and an exit code with `handle`.
"""

import logging
import sys

log = logging.getLogger(__name__)


class BoostingError(Exception):
    """
    Base class for all errors raised by the program.
    """


class UserError(BoostingError):
    """
    Base class for errors caused by the inputs given to the program.
    """


class InvalidDatasetError(UserError):
    """
    Raised when a dataset breaks its invariants (shape, finiteness, labels).
    """


class CSVFormatError(InvalidDatasetError):
    """
    Raised when a CSV file cannot be parsed. The message names the row and column.
    """


class InvalidClassLabelError(InvalidDatasetError):
    """
    Raised when a classification target is not -1 or +1.
    """


class InvalidSplitError(UserError):
    """
    Raised when split fractions are invalid or would leave an empty part.
    """


class InvalidModelSpecError(UserError):
    """
    Raised when a synthetic model specification is invalid.
    """


class SingleClassError(UserError):
    """
    Raised when a classification sample holds only one class.
    """


class IncompatibleLossError(UserError):
    """
    Raised when the loss does not match the task of the dataset.
    """


class InvalidConfigError(UserError):
    """
    Raised when a training or benchmark configuration is invalid.
    """


class IterationOutOfRangeError(UserError):
    """
    Raised when asking for an iterate F_t outside 0..T.
    """


class ModelFormatError(UserError):
    """
    Raised when a model file is malformed, truncated or of another version.
    """


class MissingValidationError(UserError):
    """
    Raised when T* selection is asked for a trace without a validation curve.
    """


class MetricError(UserError):
    """
    Raised when a metric cannot be computed for the given predictions.
    """


def handle(exception: BaseException, command: str) -> int:
    """
    Report an exception raised while running a command.

    Args:
        exception (BaseException): The exception that stopped the command.
        command (str): The name of the command that was invoked.

    Returns:
        int: The exit code for the process.
    """
    if isinstance(exception, UserError):
        print(f"{type(exception).__name__}: {exception}", file=sys.stderr)
        return 2

    if isinstance(exception, BoostingError):
        print(f"{type(exception).__name__}: {exception}", file=sys.stderr)
        return 1

    log.exception(
        "Something went wrong during invocation of command `%s`.", command
    )
    return 1
