"""
This module manages the command for training a model on CSV files.
"""
import argparse
import logging

from boost.agb.boosting import TrainConfig, train
from boost.agb.data import load_csv
from boost.agb.evaluation import select_t_star
from boost.agb.losses import LossKind
from boost.agb.model import save_model

log = logging.getLogger(__name__)


def train_cmd(args: argparse.Namespace) -> int:
    config = TrainConfig(
        algorithm=args.algo,
        loss=args.loss,
        nu=args.nu,
        iterations=args.iterations,
        leaves=args.leaves,
        min_leaf=args.min_leaf,
    )
    task = config.loss.task
    train_set = load_csv(args.train, args.target_col, task)
    val_set = load_csv(args.valid, args.target_col, task) if args.valid else None

    model, trace = train(train_set, config, val_set)
    save_model(model, args.model_out)
    log.info("Saved %r to %s", model, args.model_out)

    if args.trace_out:
        trace.to_csv(args.trace_out)
        log.info("Saved the trace to %s", args.trace_out)

    if val_set is not None:
        selection = select_t_star(trace)
        print(f"t_star={selection.t_star} val_risk={selection.val_risk_at_t_star!r}")
    return 0


def load(subparsers) -> None:
    parser = subparsers.add_parser("train", help="Train a GB or AGB model.")
    parser.add_argument("--algo", choices=["gb", "agb"], default="agb")
    parser.add_argument("--loss", choices=[kind.value for kind in LossKind], default="squared")
    parser.add_argument("--nu", type=float, default=0.1, help="Shrinkage in (0, 1).")
    parser.add_argument("--iterations", type=int, default=100, help="Number of trees T.")
    parser.add_argument("--leaves", type=int, default=2, help="Leaves per tree k.")
    parser.add_argument("--min-leaf", type=int, default=1, help="Minimum points per leaf.")
    parser.add_argument("--train", required=True, help="Training CSV.")
    parser.add_argument("--valid", default=None, help="Validation CSV, streams the validation risk.")
    parser.add_argument("--target-col", default="y")
    parser.add_argument("--model-out", required=True, help="Where to write the model file.")
    parser.add_argument("--trace-out", default=None, help="Where to write the t, train_risk, val_risk CSV.")
    parser.set_defaults(handler=train_cmd)
