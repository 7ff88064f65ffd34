import numpy as np
import pytest

from boost.agb.data import Dataset, Task


@pytest.fixture
def line_dataset() -> Dataset:
    """Four points on a line with a jump between x=2 and x=3."""
    return Dataset([[1.0], [2.0], [3.0], [4.0]], [0.0, 0.0, 10.0, 10.0], Task.REGRESSION)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
