"""
The trained model: replay of any intermediate F_t, flattened tree
coefficients, and the versioned model file.
"""
from __future__ import annotations

import enum
import json
import math

import numpy as np

from .data import Task
from .extensions import error_handler as error
from .losses import LEAF_WEIGHT_CLAMP, LossKind
from .trees import Tree

FORMAT_VERSION = "agb-model/1"


class Algorithm(enum.Enum):
    """Plain gradient boosting or its Nesterov-accelerated version."""

    GB = "gb"
    AGB = "agb"

    @classmethod
    def parse(cls, value: str | Algorithm) -> Algorithm:
        if isinstance(value, Algorithm):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise error.InvalidConfigError(f"Unknown algorithm {value!r}, use gb or agb.")


class Iterates:
    """
    The values of F_t and G_t on a fixed set of points.

    Training and prediction both advance through `step`, so the replayed
    values match the trainer's bit for bit.
    """

    def __init__(self, init: float, size: int) -> None:
        self.f = np.full(size, init, dtype=np.float64)
        self.g = self.f.copy()

    def step(self, update: np.ndarray, gamma: float | None = None) -> None:
        """
        Advance one iteration.

        F_{t+1} = G_t + update, then G_{t+1} = (1 - γ_t) F_{t+1} + γ_t F_t.
        Without γ (plain boosting) G is F.
        """
        f_next = self.g + update
        if gamma is None:
            self.g = f_next
        else:
            self.g = (1.0 - gamma) * f_next + gamma * self.f
        self.f = f_next


class BoostedModel:
    """
    An additive model of trees produced by `boosting.train`.

    Args:
        algorithm (Algorithm): GB or AGB.
        loss (LossKind): The loss it was trained with.
        nu (float): Shrinkage.
        init (float): The constant model F_0.
        trees (list[Tree]): One tree per iteration, leaf weights filled in.
        task (Task): Regression or classification.
        feature_names (tuple[str, ...] | None): Names of the training features.
        gammas (np.ndarray | None): Extrapolation weights γ_0..γ_{T-1} of an
            AGB model. Computed from the Nesterov schedule when omitted.

    Raises:
        error.ModelFormatError: If a leaf weight breaks the model invariants.
    """

    def __init__(
        self,
        algorithm: Algorithm | str,
        loss: LossKind | str,
        nu: float,
        init: float,
        trees: list[Tree],
        task: Task | str,
        feature_names: tuple[str, ...] | None = None,
        gammas: np.ndarray | None = None,
    ) -> None:
        self.algorithm = Algorithm.parse(algorithm)
        self.loss = LossKind.parse(loss)
        self.nu = float(nu)
        self.init = float(init)
        self.trees = list(trees)
        self.task = Task.parse(task)
        self.feature_names = None if feature_names is None else tuple(feature_names)

        standard = self._standard_gammas()
        if gammas is None:
            self.gammas = standard
        else:
            self.gammas = np.asarray(gammas, dtype=np.float64)[: self.iterations].copy()
        if self.gammas.shape[0] != self.iterations:
            raise error.ModelFormatError(
                f"Expected {self.iterations} extrapolation weights, got {self.gammas.shape[0]}."
            )
        self.standard_schedule = bool(np.array_equal(self.gammas, standard))

        self.check_valid()

    def _standard_gammas(self) -> np.ndarray:
        if self.algorithm is Algorithm.GB or self.iterations == 0:
            return np.zeros(self.iterations)
        # boosting imports this module
        from .boosting import nesterov_schedule

        return nesterov_schedule(self.iterations).gammas

    @property
    def iterations(self) -> int:
        """T, the number of trees."""
        return len(self.trees)

    @property
    def accelerated(self) -> bool:
        return self.algorithm is Algorithm.AGB

    def check_valid(self) -> None:
        if not (math.isfinite(self.nu) and math.isfinite(self.init)):
            raise error.ModelFormatError("nu and init must be finite.")
        if not 0 < self.nu < 1:
            raise error.ModelFormatError(f"nu must lie in (0, 1), got {self.nu}.")
        if self.loss.task is not self.task:
            raise error.ModelFormatError(
                f"A {self.loss.value} model cannot have a {self.task.value} task."
            )
        for t, tree in enumerate(self.trees):
            if self.feature_names is not None and tree.min_features > len(self.feature_names):
                raise error.ModelFormatError(
                    f"Tree {t} splits on feature {tree.min_features - 1} "
                    f"but the model has {len(self.feature_names)} features."
                )
            if not np.isfinite(tree.weights).all():
                raise error.ModelFormatError(f"Tree {t} has non-finite leaf weights.")
            if self.task is Task.CLASSIFICATION and (np.abs(tree.weights) > LEAF_WEIGHT_CLAMP).any():
                raise error.ModelFormatError(
                    f"Tree {t} has a leaf weight outside [-{LEAF_WEIGHT_CLAMP}, {LEAF_WEIGHT_CLAMP}]."
                )

    def _check_t(self, t: int | None) -> int:
        if t is None:
            return self.iterations
        if not 0 <= t <= self.iterations:
            raise error.IterationOutOfRangeError(
                f"Iteration {t} is outside 0..{self.iterations}."
            )
        return int(t)

    def _check_features(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise error.InvalidDatasetError(f"Expected a 2-d feature matrix, got shape {features.shape}.")
        if self.feature_names is not None and features.shape[1] != len(self.feature_names):
            raise error.InvalidDatasetError(
                f"The model was trained on {len(self.feature_names)} features, got {features.shape[1]}."
            )
        needed = max((tree.min_features for tree in self.trees), default=0)
        if features.shape[1] < needed:
            raise error.InvalidDatasetError(
                f"The model splits on {needed} features, got {features.shape[1]}."
            )
        return features

    def iterates(self, features: np.ndarray, t: int | None = None):
        """
        Yield the values of F_0, F_1, ..., F_t on the rows, in order.

        Each row replays F_{s+1} = G_s + ν h_{s+1}, G_{s+1} = (1 - γ_s) F_{s+1} + γ_s F_s.
        For GB models G is F and the replay is the running sum.
        """
        t = self._check_t(t)
        features = self._check_features(features)
        state = Iterates(self.init, features.shape[0])
        yield state.f
        for s in range(t):
            gamma = float(self.gammas[s]) if self.accelerated else None
            state.step(self.nu * self.trees[s].predict(features), gamma)
            yield state.f

    def predict_at(self, features: np.ndarray, t: int | None = None) -> np.ndarray:
        """
        Predictions of the iterate F_t on the rows.

        Args:
            features (np.ndarray): n×d rows.
            t (int | None): The iteration, 0..T. Defaults to T.

        Raises:
            error.IterationOutOfRangeError: If t is outside 0..T.
        """
        values = None
        for values in self.iterates(features, t):
            pass
        return values

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Predictions of the final model F_T."""
        return self.predict_at(features, self.iterations)

    def classify(self, features: np.ndarray, t: int | None = None) -> np.ndarray:
        """±1 labels: +1 where F_t > 0, -1 otherwise."""
        return np.where(self.predict_at(features, t) > 0, 1.0, -1.0)

    def effective_coefficients(self, t: int | None = None) -> np.ndarray:
        """
        Flatten the F/G recursion into one coefficient per tree.

        Both updates are affine with weights summing to one, so
        F_t = F_0 + ν Σ_{s=1..t} a[s-1] h_s, where h_s is tree s.
        With a_{t,s} the coefficients of F_t and b_{t,s} those of G_t:
        a_{t+1,t+1} = 1, a_{t+1,s} = b_{t,s} and
        b_{t+1,s} = (1 - γ_t) a_{t+1,s} + γ_t a_{t,s}.

        Returns:
            np.ndarray: a_{t,1..t}. All ones for GB models.
        """
        t = self._check_t(t)
        if not self.accelerated:
            return np.ones(t)

        a = np.zeros(0)
        b = np.zeros(0)
        for s in range(t):
            a_next = np.append(b, 1.0)
            gamma = self.gammas[s]
            b = (1.0 - gamma) * a_next + gamma * np.append(a, 0.0)
            a = a_next
        return a

    def predict_flat(self, features: np.ndarray, t: int | None = None) -> np.ndarray:
        """F_t computed from `effective_coefficients` instead of the replay."""
        t = self._check_t(t)
        features = self._check_features(features)
        coefficients = self.effective_coefficients(t)
        total = np.zeros(features.shape[0])
        for s in range(t):
            total += coefficients[s] * self.trees[s].predict(features)
        return self.init + self.nu * total

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "algorithm": self.algorithm.value,
            "loss": self.loss.value,
            "nu": self.nu,
            "init": self.init,
            "task": self.task.value,
            "feature_names": None if self.feature_names is None else list(self.feature_names),
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> BoostedModel:
        """
        Raises:
            error.ModelFormatError: On a version mismatch or missing fields.
        """
        if not isinstance(data, dict):
            raise error.ModelFormatError("A model file must hold a JSON object.")
        version = data.get("version")
        if version != FORMAT_VERSION:
            raise error.ModelFormatError(
                f"Unsupported model version {version!r}, expected {FORMAT_VERSION!r}."
            )
        try:
            trees = data["trees"]
            if not isinstance(trees, list):
                raise error.ModelFormatError("The trees field must be a list.")
            return cls(
                algorithm=data["algorithm"],
                loss=data["loss"],
                nu=data["nu"],
                init=data["init"],
                trees=[Tree.from_dict(tree) for tree in trees],
                task=data["task"],
                feature_names=data.get("feature_names"),
            )
        except KeyError as e:
            raise error.ModelFormatError(f"The model is missing the field {e.args[0]!r}.")
        except error.InvalidConfigError as e:
            raise error.ModelFormatError(str(e))
        except (TypeError, ValueError) as e:
            raise error.ModelFormatError(f"The model has a malformed field: {e}")

    def __repr__(self) -> str:
        return (
            f"BoostedModel({self.algorithm.value}, {self.loss.value}, "
            f"nu={self.nu}, T={self.iterations})"
        )


def serialize(model: BoostedModel) -> bytes:
    """
    Encode a model as a versioned JSON document.

    Floats are written with Python's shortest round-trip representation, so
    the doubles read back are exactly the ones written. The γ schedule is not
    stored: it is recomputed from T on load.

    Raises:
        error.ModelFormatError: If the model was trained with a non-standard
            schedule, which the format cannot carry.
    """
    if not model.standard_schedule:
        raise error.ModelFormatError(
            "Models trained with a custom extrapolation schedule cannot be serialized."
        )
    return json.dumps(model.to_dict(), indent=1, allow_nan=False).encode("utf-8")


def deserialize(data: bytes | str) -> BoostedModel:
    """
    Decode a model written by `serialize`.

    Raises:
        error.ModelFormatError: On truncated or corrupt input or another version.
    """
    try:
        document = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise error.ModelFormatError(f"The model file is not valid JSON: {e}")
    return BoostedModel.from_dict(document)


def save_model(model: BoostedModel, path: str) -> None:
    with open(path, "wb") as file:
        file.write(serialize(model))


def load_model(path: str) -> BoostedModel:
    """
    Raises:
        error.ModelFormatError: If the file is missing or malformed.
    """
    try:
        with open(path, "rb") as file:
            return deserialize(file.read())
    except FileNotFoundError:
        raise error.ModelFormatError(f"No such model file: {path}")
