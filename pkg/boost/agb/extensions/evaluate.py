"""
This module manages the command for scoring a saved model on labelled data.
"""
import argparse

from boost.agb.evaluation import MetricKind, metric
from boost.agb.model import load_model
from ._data import dataset_for_model


def evaluate_cmd(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    ds = dataset_for_model(args.data, model, args.target_col)
    kind = MetricKind.parse(args.metric)
    kind.check_task(ds.task)

    predictions = model.predict_at(ds.features, args.at_iteration)
    value = metric(kind, predictions, ds.targets, model.loss)
    print(f"{kind.value}={value!r}")
    return 0


def load(subparsers) -> None:
    parser = subparsers.add_parser("evaluate", help="Score a model on a labelled CSV file.")
    parser.add_argument("--model", required=True)
    parser.add_argument("--data", required=True)
    parser.add_argument("--metric", required=True, choices=[kind.value for kind in MetricKind])
    parser.add_argument("--at-iteration", type=int, default=None, help="t in 0..T (default: T).")
    parser.add_argument("--target-col", default="y")
    parser.set_defaults(handler=evaluate_cmd)
