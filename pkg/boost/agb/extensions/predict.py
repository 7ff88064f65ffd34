"""
This module manages the command for predicting with a saved model.
"""
import argparse
import logging

import numpy as np
import pandas as pd

from boost.agb.data import Task
from boost.agb.model import load_model
from ._data import features_for_model

log = logging.getLogger(__name__)


def predict_cmd(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    features = features_for_model(args.data, model, exclude=args.target_col)
    predictions = model.predict_at(features, args.at_iteration)

    frame = pd.DataFrame({"prediction": predictions})
    if model.task is Task.CLASSIFICATION:
        frame["label"] = np.where(predictions > 0, 1, -1)
    frame.to_csv(args.out, index=False)
    log.info("Wrote %d predictions to %s", len(frame), args.out)
    return 0


def load(subparsers) -> None:
    parser = subparsers.add_parser("predict", help="Predict F_t for every row of a CSV file.")
    parser.add_argument("--model", required=True)
    parser.add_argument("--data", required=True)
    parser.add_argument("--at-iteration", type=int, default=None, help="t in 0..T (default: T).")
    parser.add_argument("--target-col", default="y", help="Column ignored when the model has no feature names.")
    parser.add_argument("--out", required=True)
    parser.set_defaults(handler=predict_cmd)
