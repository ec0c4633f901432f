"""Shared fixtures. Thread caps are set before numpy loads so every BLAS call
is single-threaded and bit-reproducible."""

import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from makeitso.editing import make_default_bank
from makeitso.generator import MICRO_CONFIG, cast_params, init_toy_generator
from makeitso.objectives import FeatureExtractor


@pytest.fixture(scope="session")
def toy_params():
    return init_toy_generator(0)


@pytest.fixture(scope="session")
def micro_params():
    return init_toy_generator(0, MICRO_CONFIG)


@pytest.fixture(scope="session")
def micro_params64(micro_params):
    return cast_params(micro_params, np.float64)


@pytest.fixture(scope="session")
def toy_bank(toy_params):
    return make_default_bank(toy_params)


@pytest.fixture(scope="session")
def micro_bank(micro_params):
    return make_default_bank(micro_params, n_directions=4, seed=11)


@pytest.fixture(scope="session")
def toy_extractor(toy_params):
    return FeatureExtractor(toy_params.config.resolution)


@pytest.fixture(scope="session")
def micro_extractor(micro_params):
    return FeatureExtractor(micro_params.config.resolution)
