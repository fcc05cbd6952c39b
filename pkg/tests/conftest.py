import numpy as np
import pytest

from dprob import from_arrays
from dprob.cli import ozone_dataset


@pytest.fixture(scope="session")
def ozone():
    return ozone_dataset()


@pytest.fixture
def toy_dataset():
    """Small 2-covariate dataset with a real signal on the first covariate."""
    rng = np.random.default_rng(7)
    X = rng.uniform(size=(40, 2))
    y = 3.0 + 2.0 * X[:, 0] + rng.normal(0.0, 1.0, 40)
    return from_arrays(X, y, names=("a", "b"))
