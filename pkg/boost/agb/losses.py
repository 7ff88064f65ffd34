"""
Convex losses psi(x, y) with the four primitives boosting needs.

Every loss provides the optimal constant, the pointwise negative gradient,
the per-leaf line search and the empirical risk.
"""
from __future__ import annotations

import enum
import math

import numpy as np
from scipy.special import expit, logsumexp

from .data import Task
from .extensions import error_handler as error

EXPONENT_CLAMP = 500.0
"""Margins are clamped to [-500, 500] before exponentiation."""

LEAF_WEIGHT_CLAMP = 4.0
"""Classification leaf weights live in [-4, 4]."""

NEWTON_TOLERANCE = 1e-10
NEWTON_MAX_ITERATIONS = 20
NEWTON_MAX_HALVINGS = 60


class LossKind(enum.Enum):
    SQUARED = "squared"
    EXPONENTIAL = "exponential"
    LOGIT = "logit"

    @classmethod
    def parse(cls, value: str | LossKind) -> LossKind:
        if isinstance(value, LossKind):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise error.InvalidConfigError(
                f"Unknown loss {value!r}, use squared, exponential or logit."
            )

    @property
    def task(self) -> Task:
        """The task this loss is meant for."""
        if self is LossKind.SQUARED:
            return Task.REGRESSION
        return Task.CLASSIFICATION

    @classmethod
    def default_for(cls, task: Task) -> LossKind:
        return cls.SQUARED if task is Task.REGRESSION else cls.EXPONENTIAL


def _margin(predictions: np.ndarray, targets: np.ndarray) -> np.ndarray:
    return np.clip(targets * predictions, -EXPONENT_CLAMP, EXPONENT_CLAMP)


def _class_counts(targets: np.ndarray) -> tuple[int, int]:
    positives = int(np.count_nonzero(targets > 0))
    negatives = int(targets.shape[0] - positives)
    if positives == 0 or negatives == 0:
        raise error.SingleClassError(
            "Both classes must be present: the optimal constant is unbounded otherwise."
        )
    return positives, negatives


class Loss:
    """
    Base class of the losses.

    Subclasses implement `pointwise`, `init_constant`, `negative_gradient` and
    `leaf_weight`. All methods are pure and safe to call concurrently.
    """

    kind: LossKind

    def pointwise(self, predictions: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """psi(F_i, y_i) for every point."""
        raise NotImplementedError

    def init_constant(self, targets: np.ndarray) -> float:
        """argmin_z sum_i psi(z, y_i)."""
        raise NotImplementedError

    def negative_gradient(self, predictions: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """z_i = -d/dx psi(x, y_i) at x = F_i."""
        raise NotImplementedError

    def leaf_weight(self, leaf_predictions: np.ndarray, leaf_targets: np.ndarray) -> float:
        """argmin_w sum over the leaf of psi(F_i + w, y_i)."""
        raise NotImplementedError

    def risk(self, predictions: np.ndarray, targets: np.ndarray) -> float:
        """
        Empirical risk C_n(F): the mean of psi over the points.

        Raises:
            error.InvalidDatasetError: If the arrays are empty or of unequal length.
        """
        predictions = np.asarray(predictions, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if predictions.shape != targets.shape or predictions.size == 0:
            raise error.InvalidDatasetError(
                f"risk needs equal non-empty lengths, got {predictions.shape} and {targets.shape}."
            )
        return float(np.mean(self.pointwise(predictions, targets)))

    def leaf_risk(self, weight: float, leaf_predictions: np.ndarray, leaf_targets: np.ndarray) -> float:
        """sum over the leaf of psi(F_i + w, y_i)."""
        return float(np.sum(self.pointwise(leaf_predictions + weight, leaf_targets)))

    def check_task(self, task: Task) -> None:
        """
        Raises:
            error.IncompatibleLossError: If this loss does not fit the task.
        """
        if task is not self.kind.task:
            raise error.IncompatibleLossError(
                f"The {self.kind.value} loss needs a {self.kind.task.value} task, "
                f"got {task.value}."
            )

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class SquaredLoss(Loss):
    """
    psi(x, y) = (y - x)^2.

    The negative gradient is the plain residual y - F. The factor 2 is dropped:
    the split search is scale invariant and leaf weights are refit exactly.
    """

    kind = LossKind.SQUARED

    def pointwise(self, predictions, targets):
        return (targets - predictions) ** 2

    def init_constant(self, targets):
        targets = np.asarray(targets, dtype=np.float64)
        if targets.size == 0:
            raise error.InvalidDatasetError("No targets to fit a constant to.")
        return float(np.mean(targets))

    def negative_gradient(self, predictions, targets):
        return targets - predictions

    def leaf_weight(self, leaf_predictions, leaf_targets):
        return float(np.mean(leaf_targets - leaf_predictions))


class ExponentialLoss(Loss):
    """
    psi(x, y) = exp(-y x), the AdaBoost loss.
    """

    kind = LossKind.EXPONENTIAL

    def pointwise(self, predictions, targets):
        return np.exp(-_margin(predictions, targets))

    def init_constant(self, targets):
        positives, negatives = _class_counts(np.asarray(targets))
        return 0.5 * math.log(positives / negatives)

    def negative_gradient(self, predictions, targets):
        return targets * np.exp(-_margin(predictions, targets))

    def leaf_weight(self, leaf_predictions, leaf_targets):
        # Closed form 1/2 ln(sum_{y=+1} e^-F / sum_{y=-1} e^F), in log space.
        positive = leaf_targets > 0
        log_up = logsumexp(-leaf_predictions[positive]) if positive.any() else -np.inf
        log_down = logsumexp(leaf_predictions[~positive]) if (~positive).any() else -np.inf

        if np.isneginf(log_down):
            return LEAF_WEIGHT_CLAMP
        if np.isneginf(log_up):
            return -LEAF_WEIGHT_CLAMP

        weight = 0.5 * (log_up - log_down)
        return float(np.clip(weight, -LEAF_WEIGHT_CLAMP, LEAF_WEIGHT_CLAMP))


class LogitLoss(Loss):
    """
    psi(x, y) = log2(1 + exp(-y x)).

    There is no closed form for the leaf weight. A safeguarded Newton method
    from w = 0 is used, halving any step that would increase the leaf risk.
    """

    kind = LossKind.LOGIT

    def pointwise(self, predictions, targets):
        return np.logaddexp(0.0, -_margin(predictions, targets)) / math.log(2)

    def init_constant(self, targets):
        positives, negatives = _class_counts(np.asarray(targets))
        return math.log(positives / negatives)

    def negative_gradient(self, predictions, targets):
        # y / (1 + e^{yF}) == y * sigmoid(-yF)
        return targets * expit(-_margin(predictions, targets)) / math.log(2)

    def leaf_weight(self, leaf_predictions, leaf_targets):
        weight = 0.0
        current = self.leaf_risk(weight, leaf_predictions, leaf_targets)

        for _ in range(NEWTON_MAX_ITERATIONS):
            margin = _margin(leaf_predictions + weight, leaf_targets)
            # The 1/ln 2 factor of psi cancels in the Newton step.
            gradient = -np.sum(leaf_targets * expit(-margin))
            hessian = np.sum(expit(margin) * expit(-margin))
            if hessian <= 0 or not np.isfinite(hessian):
                break

            step = -gradient / hessian
            for _ in range(NEWTON_MAX_HALVINGS):
                candidate = self.leaf_risk(weight + step, leaf_predictions, leaf_targets)
                if candidate <= current:
                    break
                step /= 2
            else:
                break

            weight += step
            current = candidate
            if abs(step) < NEWTON_TOLERANCE:
                break

        return float(np.clip(weight, -LEAF_WEIGHT_CLAMP, LEAF_WEIGHT_CLAMP))


_LOSSES: dict[LossKind, Loss] = {
    LossKind.SQUARED: SquaredLoss(),
    LossKind.EXPONENTIAL: ExponentialLoss(),
    LossKind.LOGIT: LogitLoss(),
}


def get_loss(kind: LossKind | str) -> Loss:
    """The loss object for a kind (or its name)."""
    return _LOSSES[LossKind.parse(kind)]
