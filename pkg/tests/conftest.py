import warnings

import numpy as np
import pytest

from wake_radon.geometry import RadonGrid


@pytest.fixture(autouse=True)
def _quiet_root_warnings():
    from wake_radon.myula import MultipleRootsWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MultipleRootsWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid32():
    return RadonGrid(32)
