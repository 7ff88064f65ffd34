"""
This module manages the command for generating a synthetic dataset.
"""
import argparse
import logging

from boost.agb.data import save_csv
from boost.agb.synthetic import MODELS, ModelSpec, generate_model

log = logging.getLogger(__name__)


def simulate_cmd(args: argparse.Namespace) -> int:
    model = MODELS[args.model]
    spec = ModelSpec(
        args.model,
        args.design,
        args.n if args.n is not None else model.n,
        args.d if args.d is not None else model.d,
        args.seed,
    )
    ds = generate_model(spec)
    save_csv(ds, args.out)
    log.info("Wrote model %d (%s) with n=%d, d=%d to %s", spec.model_id, spec.design.value, ds.n, ds.d, args.out)
    return 0


def load(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="Generate a synthetic benchmark dataset as CSV.")
    parser.add_argument("--model", type=int, required=True, choices=sorted(MODELS), help="Model number.")
    parser.add_argument("--design", default="u", choices=["u", "c"], help="Uncorrelated or correlated design.")
    parser.add_argument("--n", type=int, default=None, help="Sample size (default: the model's).")
    parser.add_argument("--d", type=int, default=None, help="Dimension (default: the model's).")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="Output CSV path.")
    parser.set_defaults(handler=simulate_cmd)
