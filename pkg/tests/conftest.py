import numpy as np
import pytest

from reduction_lab.scenarios import FIX_TA, FIX_TS, build_two_slit


@pytest.fixture
def fix_ts():
    return build_two_slit(FIX_TS)


@pytest.fixture
def fix_ta():
    return build_two_slit(FIX_TA)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
