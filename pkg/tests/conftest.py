import pathlib

import numpy as np
import pytest

from hrisim.channel.scenario import SystemDims, draw_channels

TESTS_DATA = pathlib.Path(__file__).resolve().parent / "tests_data"


@pytest.fixture
def small_cfg() -> pathlib.Path:
    return TESTS_DATA / "small.toml"


@pytest.fixture
def small_dims() -> SystemDims:
    return SystemDims(M=4, N=8, N_r=2, K=2, tau=16)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def unit_channels(small_dims, rng):
    return draw_channels(small_dims, 1.0, np.array([1.0, 0.5]), rng)
