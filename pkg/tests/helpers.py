import numpy as np

from boost.agb.data import Dataset, Task


def random_regression(rng: np.random.Generator, n: int = 80, d: int = 3) -> Dataset:
    features = rng.uniform(-1, 1, size=(n, d))
    targets = features[:, 0] ** 2 - features[:, 1] + 0.3 * rng.standard_normal(n)
    return Dataset(features, targets, Task.REGRESSION)


def random_classification(rng: np.random.Generator, n: int = 80, d: int = 3) -> Dataset:
    features = rng.uniform(-1, 1, size=(n, d))
    score = features[:, 0] + 0.5 * features[:, 1] + 0.4 * rng.standard_normal(n)
    targets = np.where(score > 0, 1.0, -1.0)
    targets[:2] = (1.0, -1.0)
    return Dataset(features, targets, Task.CLASSIFICATION)
