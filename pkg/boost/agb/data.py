"""
Datasets, numeric CSV files and train/validation/test splitting.
"""
from __future__ import annotations

import enum
import logging
import math
import os

import attrs
import numpy as np
import pandas as pd

from .extensions import error_handler as error

log = logging.getLogger(__name__)


class Task(enum.Enum):
    """The kind of supervised problem a dataset holds."""

    REGRESSION = "regression"
    CLASSIFICATION = "classification"

    @classmethod
    def parse(cls, value: str | Task) -> Task:
        if isinstance(value, Task):
            return value
        aliases = {
            "regression": cls.REGRESSION,
            "reg": cls.REGRESSION,
            "classification": cls.CLASSIFICATION,
            "binary": cls.CLASSIFICATION,
            "class": cls.CLASSIFICATION,
        }
        try:
            return aliases[value.strip().lower()]
        except KeyError:
            raise error.InvalidConfigError(f"Unknown task kind {value!r}.")


def _frozen_array(value, ndim: int) -> np.ndarray:
    array = np.array(value, dtype=np.float64, copy=True)
    if array.ndim != ndim:
        raise error.InvalidDatasetError(
            f"Expected a {ndim}-dimensional array, got shape {array.shape}."
        )
    array.setflags(write=False)
    return array


@attrs.define(frozen=True, eq=False)
class Dataset:
    """
    A feature matrix with its targets.

    Datasets are immutable: the arrays are copied on construction and marked
    read-only, so they can be shared between readers freely.

    Attributes:
        features (np.ndarray): The n×d feature matrix.
        targets (np.ndarray): The n targets. Either reals or ±1 labels.
        task (Task): Regression or binary classification.
        feature_names (tuple[str, ...]): One name per feature column.
    """

    features: np.ndarray = attrs.field(converter=lambda v: _frozen_array(v, 2))
    targets: np.ndarray = attrs.field(converter=lambda v: _frozen_array(v, 1))
    task: Task = attrs.field(converter=Task.parse)
    feature_names: tuple[str, ...] = attrs.field(default=None)

    def __attrs_post_init__(self) -> None:
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise error.InvalidDatasetError(
                f"A dataset needs at least one row and one feature, got {n}×{d}."
            )
        if self.targets.shape[0] != n:
            raise error.InvalidDatasetError(
                f"{n} feature rows but {self.targets.shape[0]} targets."
            )
        if not np.isfinite(self.features).all():
            raise error.InvalidDatasetError("Features must all be finite.")
        if not np.isfinite(self.targets).all():
            raise error.InvalidDatasetError("Targets must all be finite.")
        if self.task is Task.CLASSIFICATION:
            bad = ~np.isin(self.targets, (-1.0, 1.0))
            if bad.any():
                row = int(np.flatnonzero(bad)[0])
                raise error.InvalidClassLabelError(
                    f"invalid class label {self.targets[row]!r} at row {row}; "
                    "classification targets must be -1 or +1."
                )

        if self.feature_names is None:
            names = tuple(f"x{j + 1}" for j in range(d))
        else:
            names = tuple(str(name) for name in self.feature_names)
        if len(names) != d:
            raise error.InvalidDatasetError(
                f"{d} feature columns but {len(names)} feature names."
            )
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        """Number of rows."""
        return self.features.shape[0]

    @property
    def d(self) -> int:
        """Number of features."""
        return self.features.shape[1]

    def take(self, indices: np.ndarray) -> Dataset:
        """A new dataset made of the given rows, in the given order."""
        return Dataset(
            self.features[indices],
            self.targets[indices],
            self.task,
            self.feature_names,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.task is other.task
            and self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.targets, other.targets)
        )

    __hash__ = None


@attrs.define(frozen=True)
class SplitSpec:
    """
    How to cut a dataset into train, validation and test parts.

    The defaults are the 50% / 25% / 25% protocol.
    """

    train_fraction: float = 0.5
    val_fraction: float = 0.25
    seed: int = 0

    def __attrs_post_init__(self) -> None:
        if not (self.train_fraction > 0 and self.val_fraction > 0):
            raise error.InvalidSplitError("Split fractions must be positive.")
        if not self.train_fraction + self.val_fraction < 1:
            raise error.InvalidSplitError(
                "train_fraction + val_fraction must be smaller than 1."
            )
        if not 0 <= self.seed < 2**64:
            raise error.InvalidSplitError("The seed must be a 64-bit unsigned integer.")


def _cell_error(cell: str, line: int, column: str) -> error.CSVFormatError:
    try:
        float(cell)
    except ValueError:
        return error.CSVFormatError(f"Non-numeric cell {cell!r} at row {line}, column {column!r}.")
    return error.CSVFormatError(f"Non-finite cell {cell!r} at row {line}, column {column!r}.")


def read_table(path: str | os.PathLike) -> tuple[list[str], np.ndarray]:
    """
    Read a strictly numeric CSV file with a header row.

    Args:
        path: The file to read.

    Returns:
        tuple[list[str], np.ndarray]: The header and the n×m matrix of values.

    Raises:
        error.CSVFormatError: If the file is missing, empty or ragged, repeats
            a column name or has a cell that is not a finite real number.
    """
    if not os.path.isfile(path):
        raise error.CSVFormatError(f"No such file: {os.fspath(path)}")

    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise error.CSVFormatError(f"{os.fspath(path)} is empty, a header row is required.")
    except pd.errors.ParserError as e:
        raise error.CSVFormatError(f"{os.fspath(path)} is ragged: {e}")

    header = [str(name).strip() for name in raw.iloc[0]]
    seen = set()
    for name in header:
        if name in seen:
            raise error.CSVFormatError(f"Column {name!r} appears more than once in the header.")
        seen.add(name)

    body = raw.iloc[1:]
    if body.empty:
        raise error.CSVFormatError(f"{os.fspath(path)} has a header but no rows.")

    # short rows come back padded with empty or missing cells
    body = body.fillna("").apply(lambda column: column.str.strip())
    numeric = body.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(numeric)
    if bad.any():
        i, j = (int(k) for k in np.argwhere(bad)[0])
        # the header is row 1 of the file
        raise _cell_error(body.iat[i, j], int(body.index[i]) + 1, header[j])

    # object to float64 goes through float(), which rounds correctly
    return header, body.to_numpy(dtype=object).astype(np.float64)


def load_csv(
    path: str | os.PathLike,
    target_column: str,
    task: Task | str,
) -> Dataset:
    """
    Load a dataset from a numeric CSV file.

    The named column becomes the targets, every other column is a feature in
    header order.

    Raises:
        error.CSVFormatError: On a missing file, a missing target column, a repeated
            column name or a non-numeric cell.
        error.InvalidClassLabelError: If a classification target is not ±1.
    """
    header, table = read_table(path)

    matches = [j for j, name in enumerate(header) if name == target_column]
    if not matches:
        raise error.CSVFormatError(f"Target column {target_column!r} is not in the header.")

    target = matches[0]
    feature_columns = [j for j in range(len(header)) if j != target]
    if not feature_columns:
        raise error.CSVFormatError("The file has no feature columns.")

    ds = Dataset(
        table[:, feature_columns],
        table[:, target],
        task,
        tuple(header[j] for j in feature_columns),
    )
    log.debug("Loaded %s: n=%d, d=%d", os.fspath(path), ds.n, ds.d)
    return ds


def save_csv(ds: Dataset, path: str | os.PathLike, target_column: str = "y") -> None:
    """
    Write a dataset as CSV, features first and the target last.

    Numbers are written with 17 significant digits so `load_csv` reads back
    the exact same doubles.
    """
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)

    frame = pd.DataFrame(ds.features, columns=list(ds.feature_names))
    frame[target_column] = ds.targets
    frame.to_csv(path, index=False, float_format="%.17g")


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Draw the row indices of the train, validation and test parts.

    A seeded uniform permutation of 0..n-1 is cut into floor(n * train_fraction)
    train rows, floor(n * val_fraction) validation rows and the rest for test.
    """
    n_train = math.floor(n * spec.train_fraction)
    n_val = math.floor(n * spec.val_fraction)
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise error.InvalidSplitError(
            f"Splitting {n} rows with fractions {spec.train_fraction}/{spec.val_fraction} "
            f"leaves an empty part ({n_train}, {n_val}, {n_test})."
        )

    permutation = np.random.default_rng(spec.seed).permutation(n)
    return (
        permutation[:n_train],
        permutation[n_train:n_train + n_val],
        permutation[n_train + n_val:],
    )


def split_dataset(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """
    Split a dataset into train, validation and test parts.

    Returns:
        tuple[Dataset, Dataset, Dataset]: The three parts. Same seed, same parts.
    """
    if ds.n < 4:
        raise error.InvalidSplitError(f"At least 4 rows are needed to split, got {ds.n}.")

    train_rows, val_rows, test_rows = split_indices(ds.n, spec)
    return ds.take(train_rows), ds.take(val_rows), ds.take(test_rows)
