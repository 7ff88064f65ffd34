"""
Metrics, validation-based selection of the model size T*, and risk curves.
"""
from __future__ import annotations

import enum

import attrs
import numpy as np
from scipy.stats import rankdata

from .data import Dataset, Task
from .extensions import error_handler as error
from .losses import LossKind, get_loss
from .model import BoostedModel


class MetricKind(enum.Enum):
    MSE = "mse"
    MISCLASSIFICATION = "misclass"
    AUC = "auc"
    LOSS_RISK = "lossrisk"

    @classmethod
    def parse(cls, value: str | MetricKind) -> MetricKind:
        if isinstance(value, MetricKind):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise error.InvalidConfigError(
                f"Unknown metric {value!r}, use mse, misclass, auc or lossrisk."
            )

    def check_task(self, task: Task) -> None:
        """
        Raises:
            error.MetricError: If the metric does not apply to the task.
        """
        if self is MetricKind.MSE and task is not Task.REGRESSION:
            raise error.MetricError("MSE needs a regression task.")
        if self in (MetricKind.MISCLASSIFICATION, MetricKind.AUC) and task is not Task.CLASSIFICATION:
            raise error.MetricError(f"{self.value} needs a classification task.")


@attrs.define(frozen=True, eq=False)
class SelectionResult:
    """
    The iteration T* with the smallest validation risk.

    Attributes:
        t_star (int): In 1..T, the smallest index among ties.
        val_risk_at_t_star (float): The validation risk of F_{T*}.
        curve (np.ndarray): The full validation curve, index t is F_t.
    """

    t_star: int
    val_risk_at_t_star: float
    curve: np.ndarray


def select_t_star(trace) -> SelectionResult:
    """
    Select T* = argmin over t in 1..T of the validation risk.

    The constant model t = 0 is never selected. Ties go to the smallest t.

    Args:
        trace (TrainTrace): A trace with a validation curve.

    Raises:
        error.MissingValidationError: If the trace has no validation curve.
    """
    curve = trace.val_risk
    if curve is None:
        raise error.MissingValidationError("T* selection needs a validation curve.")
    curve = np.asarray(curve, dtype=np.float64)
    if curve.shape[0] < 2:
        raise error.MissingValidationError("The validation curve has no boosted iterate.")

    t_star = int(np.argmin(curve[1:])) + 1
    return SelectionResult(t_star, float(curve[t_star]), curve)


def _check_lengths(predictions: np.ndarray, targets: np.ndarray) -> None:
    if predictions.shape != targets.shape or predictions.ndim != 1 or predictions.size == 0:
        raise error.MetricError(
            f"Metrics need equal non-empty lengths, got {predictions.shape} and {targets.shape}."
        )


def _check_both_classes(targets: np.ndarray) -> None:
    positives = np.count_nonzero(targets > 0)
    if positives == 0 or positives == targets.size:
        raise error.MetricError("Both classes must be present.")


def mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean((targets - predictions) ** 2))


def misclassification(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Share of points where the sign rule (+1 iff F > 0) disagrees with the label."""
    labels = np.where(predictions > 0, 1.0, -1.0)
    return float(np.mean(labels != targets))


def auc(predictions: np.ndarray, targets: np.ndarray) -> float:
    """
    Area under the ROC curve via the Mann-Whitney statistic.

    Tied scores get their midrank, so a tied positive/negative pair counts 1/2.
    """
    positive = targets > 0
    n_pos = int(np.count_nonzero(positive))
    n_neg = targets.size - n_pos
    ranks = rankdata(predictions, method="average")
    u = np.sum(ranks[positive]) - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def metric(
    kind: MetricKind | str,
    predictions: np.ndarray,
    targets: np.ndarray,
    loss: LossKind | str | None = None,
) -> float:
    """
    Compute a metric of predictions F against targets.

    Args:
        kind (MetricKind | str): mse, misclass, auc or lossrisk.
        predictions (np.ndarray): The values of F.
        targets (np.ndarray): The true responses.
        loss (LossKind | str | None): The loss for `lossrisk`.

    Raises:
        error.MetricError: On unequal lengths, or a single class for
            misclassification and AUC.
    """
    kind = MetricKind.parse(kind)
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    _check_lengths(predictions, targets)

    if kind is MetricKind.MSE:
        return mse(predictions, targets)
    if kind is MetricKind.LOSS_RISK:
        if loss is None:
            raise error.MetricError("lossrisk needs a loss.")
        return get_loss(loss).risk(predictions, targets)

    _check_both_classes(targets)
    if kind is MetricKind.MISCLASSIFICATION:
        return misclassification(predictions, targets)
    return auc(predictions, targets)


def default_metrics(task: Task) -> tuple[MetricKind, ...]:
    """The metrics reported for a task: the loss risk plus MSE, or misclassification and AUC."""
    if task is Task.REGRESSION:
        return (MetricKind.LOSS_RISK, MetricKind.MSE)
    return (MetricKind.LOSS_RISK, MetricKind.MISCLASSIFICATION, MetricKind.AUC)


def evaluate_model(
    model: BoostedModel,
    ds: Dataset,
    kinds: tuple[MetricKind, ...] | None = None,
    t: int | None = None,
) -> dict[str, float]:
    """
    Metrics of the iterate F_t of a model on a dataset.

    Returns:
        dict[str, float]: Metric name to value.
    """
    kinds = default_metrics(ds.task) if kinds is None else kinds
    predictions = model.predict_at(ds.features, t)
    results = {}
    for kind in kinds:
        kind.check_task(ds.task)
        results[kind.value] = metric(kind, predictions, ds.targets, model.loss)
    return results


def risk_curve(model: BoostedModel, ds: Dataset, loss: LossKind | str | None = None) -> np.ndarray:
    """
    The risk of every iterate F_0..F_T on a dataset, by streaming replay.

    Args:
        model (BoostedModel): The model.
        ds (Dataset): The points to score.
        loss (LossKind | str | None): Defaults to the model's loss.

    Returns:
        np.ndarray: Length T+1.
    """
    scorer = get_loss(loss if loss is not None else model.loss)
    return np.array([scorer.risk(values, ds.targets) for values in model.iterates(ds.features)])
