import numpy as np
import pytest

from fhmimo.config import RadarConfig


@pytest.fixture
def cfg():
    """Experiment-default configuration (20 sub-bands over 20 MHz, 2 TX,
    5 hops of 1 us, 40 us PRT, 40 MHz sampling, 5.5 GHz carrier)."""
    return RadarConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
