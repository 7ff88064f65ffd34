"""
The GB and AGB training loops.

AGB keeps two sequences on the training points: the iterates F_t and the
extrapolated points G_t. Gradients and leaf line searches are taken at G_t:

    Z_i        = -psi'(G_t(X_i), Y_i)
    tree       = least-squares fit of Z on X
    w_j        = argmin_w sum_{X_i in leaf j} psi(G_t(X_i) + w, Y_i)
    F_{t+1}    = G_t + ν Σ_j w_j 1[leaf j]
    G_{t+1}    = (1 - γ_t) F_{t+1} + γ_t F_t

GB is the same loop with G = F.
"""
from __future__ import annotations

import logging
import math
import os

import attrs
import numpy as np
import pandas as pd

from .data import Dataset
from .extensions import error_handler as error
from .losses import LossKind, get_loss
from .model import Algorithm, BoostedModel, Iterates
from .trees import fit_tree, presort

log = logging.getLogger(__name__)


def _float_array(value) -> np.ndarray:
    array = np.array(value, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@attrs.define(frozen=True, eq=False)
class NesterovSchedule:
    """
    The Nesterov weights λ_0..λ_T and γ_0..γ_{T-1}.

    λ_0 = 0, λ_t = (1 + sqrt(1 + 4 λ_{t-1}^2)) / 2 and γ_t = (1 - λ_t) / λ_{t+1},
    so γ_0 = 1, γ_1 = 0 and γ_t lies in (-1, 0) afterwards.
    """

    lambdas: np.ndarray = attrs.field(converter=_float_array)
    gammas: np.ndarray = attrs.field(converter=_float_array)

    @property
    def iterations(self) -> int:
        return self.gammas.shape[0]

    @classmethod
    def constant(cls, iterations: int, gamma: float = 0.0) -> NesterovSchedule:
        """A schedule with a fixed γ. γ = 0 turns AGB into GB."""
        return cls(np.zeros(iterations + 1), np.full(iterations, gamma))


def nesterov_schedule(iterations: int) -> NesterovSchedule:
    """
    Compute the Nesterov schedule for T iterations in double precision.

    Raises:
        error.InvalidConfigError: If T < 1.
    """
    if iterations < 1:
        raise error.InvalidConfigError(f"The schedule needs T >= 1, got {iterations}.")

    lambdas = np.zeros(iterations + 1)
    for t in range(1, iterations + 1):
        lambdas[t] = (1.0 + math.sqrt(1.0 + 4.0 * lambdas[t - 1] ** 2)) / 2.0
    gammas = (1.0 - lambdas[:-1]) / lambdas[1:]
    return NesterovSchedule(lambdas, gammas)


def _positive_int(name: str, minimum: int):
    def check(instance, attribute, value) -> None:
        if value < minimum:
            raise error.InvalidConfigError(f"{name} must be at least {minimum}, got {value}.")

    return check


def _check_nu(instance, attribute, value) -> None:
    if not 0 < value < 1:
        raise error.InvalidConfigError(f"The shrinkage nu must lie in (0, 1), got {value}.")


@attrs.define(frozen=True)
class TrainConfig:
    """
    Settings of one training run.

    Attributes:
        algorithm (Algorithm): GB or AGB.
        loss (LossKind): The loss to minimize.
        nu (float): Shrinkage, 0 < nu < 1.
        iterations (int): T >= 1.
        leaves (int): k >= 2 leaves per tree.
        min_leaf (int): Minimum points per leaf.
    """

    algorithm: Algorithm = attrs.field(converter=Algorithm.parse)
    loss: LossKind = attrs.field(converter=LossKind.parse)
    nu: float = attrs.field(converter=float, validator=_check_nu)
    iterations: int = attrs.field(converter=int, validator=_positive_int("iterations", 1))
    leaves: int = attrs.field(default=2, converter=int, validator=_positive_int("leaves", 2))
    min_leaf: int = attrs.field(default=1, converter=int, validator=_positive_int("min_leaf", 1))


@attrs.define(frozen=True, eq=False)
class TrainTrace:
    """
    Risks of every iterate, index t is the risk of F_t (0 is the constant model).
    """

    train_risk: np.ndarray = attrs.field(converter=_float_array)
    val_risk: np.ndarray | None = attrs.field(
        default=None,
        converter=attrs.converters.optional(_float_array),
    )

    @property
    def iterations(self) -> int:
        return self.train_risk.shape[0] - 1

    def to_frame(self) -> pd.DataFrame:
        """Columns t, train_risk and val_risk (empty without validation)."""
        frame = pd.DataFrame({
            "t": np.arange(self.train_risk.shape[0]),
            "train_risk": self.train_risk,
        })
        frame["val_risk"] = self.val_risk if self.val_risk is not None else np.nan
        return frame

    def to_csv(self, path: str | os.PathLike) -> None:
        self.to_frame().to_csv(path, index=False)


def train(
    train: Dataset,
    config: TrainConfig,
    val: Dataset | None = None,
    schedule: NesterovSchedule | None = None,
) -> tuple[BoostedModel, TrainTrace]:
    """
    Run GB or AGB for `config.iterations` iterations.

    Training uses no randomness: the same inputs give the same model and trace.

    Args:
        train (Dataset): The training set.
        config (TrainConfig): The run settings.
        val (Dataset | None): A validation set. Its risk of every F_t is
            streamed into the trace.
        schedule (NesterovSchedule | None): Replaces the Nesterov schedule of
            an AGB run. Ignored for GB.

    Returns:
        tuple[BoostedModel, TrainTrace]: The model and the per-iteration risks.

    Raises:
        error.IncompatibleLossError: If the loss does not fit the task.
        error.SingleClassError: If a classification training set has one class.
        error.BoostingError: If the risk stops being finite.
    """
    loss = get_loss(config.loss)
    loss.check_task(train.task)
    if val is not None:
        loss.check_task(val.task)
        if val.d != train.d:
            raise error.InvalidDatasetError(
                f"The validation set has {val.d} features, the training set {train.d}."
            )

    accelerated = config.algorithm is Algorithm.AGB
    T = config.iterations
    if accelerated:
        schedule = schedule or nesterov_schedule(T)
        if schedule.iterations < T:
            raise error.InvalidConfigError(
                f"The schedule covers {schedule.iterations} iterations, {T} are needed."
            )
        gammas = schedule.gammas[:T]
    else:
        gammas = None

    features, targets = train.features, train.targets
    init = loss.init_constant(targets)
    order = presort(features)
    rows = np.arange(train.n)

    state = Iterates(init, train.n)
    val_state = Iterates(init, val.n) if val is not None else None

    train_risk = np.empty(T + 1)
    val_risk = np.empty(T + 1) if val is not None else None
    train_risk[0] = loss.risk(state.f, targets)
    if val is not None:
        val_risk[0] = loss.risk(val_state.f, val.targets)

    log.info(
        "Training %s with the %s loss: nu=%g, T=%d, k=%d on %d points",
        config.algorithm.name, config.loss.value, config.nu, T, config.leaves, train.n,
    )
    report_every = max(1, T // 10)

    trees = []
    for t in range(T):
        gradient = loss.negative_gradient(state.g, targets)
        tree = fit_tree(rows, features, gradient, config.leaves, config.min_leaf, order)

        leaves = tree.apply(features)
        weights = np.array([
            loss.leaf_weight(state.g[leaves == j], targets[leaves == j])
            for j in range(tree.leaf_count)
        ])
        tree = tree.with_weights(weights)
        trees.append(tree)

        gamma = float(gammas[t]) if accelerated else None
        state.step(config.nu * tree.weights[leaves], gamma)
        train_risk[t + 1] = loss.risk(state.f, targets)

        if val is not None:
            val_state.step(config.nu * tree.predict(val.features), gamma)
            val_risk[t + 1] = loss.risk(val_state.f, val.targets)

        if not math.isfinite(train_risk[t + 1]):
            raise error.BoostingError(f"The training risk is not finite at iteration {t + 1}.")

        if (t + 1) % report_every == 0:
            log.debug("Iteration %d/%d: train risk %.6g", t + 1, T, train_risk[t + 1])

    model = BoostedModel(
        algorithm=config.algorithm,
        loss=config.loss,
        nu=config.nu,
        init=init,
        trees=trees,
        task=train.task,
        feature_names=train.feature_names,
        gammas=gammas,
    )
    log.info("Finished: train risk %.6g -> %.6g", train_risk[0], train_risk[-1])
    return model, TrainTrace(train_risk, val_risk)
