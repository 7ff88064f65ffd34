"""
Generators for the five synthetic benchmark models.

Feature indices in the model formulas are 1-based, as the models are usually
written: `X(3)` is the third column.

Every random draw goes through `numpy.random.default_rng(seed)` (PCG64), so
equal specs give bit-identical datasets.
"""
from __future__ import annotations

import enum
from typing import Callable

import attrs
import numpy as np

from .data import Dataset, Task
from .extensions import error_handler as error

CORRELATION = 0.5
"""Lag-one correlation of the correlated design, Σ_ij = 2^-|i-j|."""


class DesignKind(enum.Enum):
    """How the feature vectors are drawn."""

    UNCORRELATED = "u"
    CORRELATED = "c"

    @classmethod
    def parse(cls, value: str | DesignKind) -> DesignKind:
        if isinstance(value, DesignKind):
            return value
        aliases = {
            "u": cls.UNCORRELATED,
            "uncorrelated": cls.UNCORRELATED,
            "c": cls.CORRELATED,
            "correlated": cls.CORRELATED,
        }
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise error.InvalidModelSpecError(f"Unknown design {value!r}, use u or c.")


@attrs.define(frozen=True)
class SyntheticModel:
    """
    One benchmark model.

    Attributes:
        model_id (int): 1 to 5.
        task (Task): Regression for models 1-3, classification for 4 and 5.
        n (int): Default sample size.
        d (int): Default dimension.
        max_index (int): Largest 1-based feature index the formula reads.
        noise_variance (float): Variance of the Gaussian noise term.
        signal (Callable): Noiseless part of the response, given X and the design.
    """

    model_id: int
    task: Task
    n: int
    d: int
    max_index: int
    noise_variance: float
    signal: Callable[[np.ndarray, DesignKind], np.ndarray]


def X(features: np.ndarray, j: int) -> np.ndarray:
    """Column j of the design, 1-based."""
    return features[:, j - 1]


def _model1(x: np.ndarray, design: DesignKind) -> np.ndarray:
    return X(x, 1) * X(x, 2) + X(x, 3) ** 2 - X(x, 4) * X(x, 7) + X(x, 8) * X(x, 10) - X(x, 6) ** 2


def _model2(x: np.ndarray, design: DesignKind) -> np.ndarray:
    return -np.sin(2 * X(x, 1)) + X(x, 2) ** 2 + X(x, 3) - np.exp(-X(x, 4))


def _model3(x: np.ndarray, design: DesignKind) -> np.ndarray:
    return X(x, 1) + 3 * X(x, 3) ** 2 - 2 * np.exp(-X(x, 5)) + X(x, 6)


def _model4(x: np.ndarray, design: DesignKind) -> np.ndarray:
    return np.sum(x[:, :10] ** 2, axis=1)


def _model5(x: np.ndarray, design: DesignKind) -> np.ndarray:
    return X(x, 1) + X(x, 4) ** 3 + X(x, 9) + np.sin(X(x, 12) * X(x, 18))


MODELS: dict[int, SyntheticModel] = {
    1: SyntheticModel(1, Task.REGRESSION, 1000, 100, 10, 0.5, _model1),
    2: SyntheticModel(2, Task.REGRESSION, 800, 100, 4, 0.5, _model2),
    3: SyntheticModel(3, Task.REGRESSION, 1000, 500, 6, 0.0, _model3),
    4: SyntheticModel(4, Task.CLASSIFICATION, 2000, 30, 10, 0.0, _model4),
    5: SyntheticModel(5, Task.CLASSIFICATION, 1500, 50, 18, 0.1, _model5),
}

MODEL4_THRESHOLDS = {
    DesignKind.UNCORRELATED: 3.5,
    DesignKind.CORRELATED: 9.34,
}
MODEL5_THRESHOLD = 0.38


def threshold(model_id: int, design: DesignKind) -> float | None:
    """The decision threshold of a classification model, None for regression."""
    if model_id == 4:
        return MODEL4_THRESHOLDS[design]
    if model_id == 5:
        return MODEL5_THRESHOLD
    return None


def _valid_model_id(instance, attribute, value) -> None:
    if value not in MODELS:
        raise error.InvalidModelSpecError(f"model_id must be one of 1..5, got {value!r}.")


@attrs.define(frozen=True)
class ModelSpec:
    """
    Which synthetic dataset to generate.

    Raises:
        error.InvalidModelSpecError: If the model id is unknown, n < 1, or d is
            smaller than the largest feature index the formula uses.
    """

    model_id: int = attrs.field(validator=_valid_model_id)
    design: DesignKind = attrs.field(converter=DesignKind.parse)
    n: int = attrs.field(converter=int)
    d: int = attrs.field(converter=int)
    seed: int = attrs.field(default=0, converter=int)

    def __attrs_post_init__(self) -> None:
        if self.n < 1:
            raise error.InvalidModelSpecError(f"n must be at least 1, got {self.n}.")
        needed = MODELS[self.model_id].max_index
        if self.d < needed:
            raise error.InvalidModelSpecError(
                f"Model {self.model_id} reads feature {needed}, d={self.d} is too small."
            )
        if not 0 <= self.seed < 2**64:
            raise error.InvalidModelSpecError("The seed must be a 64-bit unsigned integer.")

    @classmethod
    def default(
        cls,
        model_id: int,
        design: DesignKind | str = DesignKind.UNCORRELATED,
        seed: int = 0,
    ) -> ModelSpec:
        """A ModelSpec with the model's usual n and d."""
        if model_id not in MODELS:
            raise error.InvalidModelSpecError(f"model_id must be one of 1..5, got {model_id!r}.")
        model = MODELS[model_id]
        return cls(model_id, design, model.n, model.d, seed)

    @property
    def model(self) -> SyntheticModel:
        return MODELS[self.model_id]


def sample_design(
    n: int,
    d: int,
    design: DesignKind | str,
    seed: int | np.random.Generator,
) -> np.ndarray:
    """
    Draw an n×d design matrix.

    Uncorrelated rows are uniform over (-1, 1)^d. Correlated rows are centred
    Gaussians with covariance 2^-|i-j|, built column by column with the AR(1)
    recursion X(1) = e(1), X(j+1) = ρ X(j) + sqrt(1 - ρ²) e(j+1), ρ = 1/2,
    whose stationary covariance is exactly ρ^|i-j|.

    Args:
        n (int): Number of rows.
        d (int): Number of columns.
        design (DesignKind | str): The design.
        seed (int | np.random.Generator): A seed or an already seeded generator.

    Returns:
        np.ndarray: The design matrix.
    """
    if n < 1 or d < 1:
        raise error.InvalidModelSpecError(f"n and d must be positive, got n={n}, d={d}.")

    design = DesignKind.parse(design)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    if design is DesignKind.UNCORRELATED:
        return rng.uniform(-1.0, 1.0, size=(n, d))

    noise = rng.standard_normal(size=(n, d))
    scale = np.sqrt(1.0 - CORRELATION**2)
    features = np.empty((n, d))
    features[:, 0] = noise[:, 0]
    for j in range(1, d):
        features[:, j] = CORRELATION * features[:, j - 1] + scale * noise[:, j]
    return features


def responses(
    model_id: int,
    design: DesignKind,
    features: np.ndarray,
    noise: np.ndarray,
) -> np.ndarray:
    """
    Evaluate a model's response for given features and noise draws.

    Classification models return ±1 labels: +1 when the noisy signal is
    strictly above the threshold.
    """
    model = MODELS[model_id]
    value = model.signal(features, design) + noise
    cut = threshold(model_id, design)
    if cut is None:
        return value
    return np.where(value > cut, 1.0, -1.0)


def generate_model(spec: ModelSpec) -> Dataset:
    """
    Generate a synthetic dataset.

    The design is drawn first, then the noise, from one generator seeded with
    `spec.seed`. The noise is Gaussian with mean 0 and the model's variance,
    that is a standard deviation of sqrt(variance). Model 3 and Model 4 are
    noiseless.

    Returns:
        Dataset: Columns x1..xd, targets y.
    """
    model = spec.model
    rng = np.random.default_rng(spec.seed)
    features = sample_design(spec.n, spec.d, spec.design, rng)

    if model.noise_variance > 0:
        noise = rng.normal(0.0, np.sqrt(model.noise_variance), size=spec.n)
    else:
        noise = np.zeros(spec.n)

    targets = responses(spec.model_id, spec.design, features, noise)
    return Dataset(features, targets, model.task)
