"""
Helpers shared by the commands that read data for an existing model.
"""
import os

import numpy as np

from boost.agb.data import Dataset, read_table
from boost.agb.model import BoostedModel
from boost.agb.extensions import error_handler as error


def _columns(header: list[str], names: tuple[str, ...], path) -> list[int]:
    positions = []
    for name in names:
        if header.count(name) != 1:
            raise error.CSVFormatError(
                f"{os.fspath(path)} must have exactly one column named {name!r}."
            )
        positions.append(header.index(name))
    return positions


def features_for_model(path: str, model: BoostedModel, exclude: str | None = None) -> np.ndarray:
    """
    The feature matrix of a CSV file, laid out the way the model expects.

    Columns are picked by the model's feature names when it has them.
    Otherwise every column except `exclude` is used, in header order.
    """
    header, table = read_table(path)
    if model.feature_names is not None:
        return table[:, _columns(header, model.feature_names, path)]
    keep = [j for j, name in enumerate(header) if name != exclude]
    return table[:, keep]


def dataset_for_model(path: str, model: BoostedModel, target_column: str) -> Dataset:
    """A labelled dataset from a CSV file, with the model's feature layout."""
    header, table = read_table(path)
    target = _columns(header, (target_column,), path)[0]
    if model.feature_names is not None:
        features = table[:, _columns(header, model.feature_names, path)]
        names = model.feature_names
    else:
        keep = [j for j in range(len(header)) if j != target]
        features = table[:, keep]
        names = tuple(header[j] for j in keep)
    return Dataset(features, table[:, target], model.task, names)
