import numpy as np
import pytest

from dmoc.metric_space import DataSet


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def three_points():
    return DataSet([0.0, 0.5, 1.0], [0.0, 0.25, 1.0])


@pytest.fixture
def cross_batch():
    # the only pairs with differing values straddle the two C=2 batches
    return DataSet([0.0, 0.5, 1.0, 1.5], [0.0, 0.0, 10.0, 10.0])
