import numpy as np
import pytest

from pycornea.geometry import CameraIntrinsics, CorneaModel


@pytest.fixture
def model():
    return CorneaModel()


@pytest.fixture
def camera():
    return CameraIntrinsics(1600.0, 200.0, 150.0, 400, 300)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
