import numpy as np
import pytest

from analogmem.channel import (
    ConditionalChannel,
    SynthPcmParams,
    linear_voltage_grid,
    synth_pcm_channel,
    uniform_resistance_grid,
)


def default_channel(n_cells=2001, n_v=40):
    return synth_pcm_channel(
        SynthPcmParams(), linear_voltage_grid(0.5, 3.0, n_v), uniform_resistance_grid(3.0, 7.5, n_cells)
    )


def bsc(p):
    return ConditionalChannel.from_matrix([[1 - p, p], [p, 1 - p]])


def bec(eps):
    return ConditionalChannel.from_matrix([[1 - eps, eps, 0.0], [0.0, eps, 1 - eps]])


def random_channel(rng, n_rows, n_cols, alpha=0.5):
    return ConditionalChannel.from_matrix(rng.dirichlet(np.full(n_cols, alpha), size=n_rows))


@pytest.fixture(scope="session")
def pcm_512():
    return default_channel(512)


@pytest.fixture(scope="session")
def pcm_2001():
    return default_channel(2001)


@pytest.fixture(scope="session")
def pcm_small():
    return default_channel(128, 20)
