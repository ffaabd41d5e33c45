import numpy as np
import pytest

from fuse_traffic.data.series import NormStats
from fuse_traffic.data.windows import WindowSample


@pytest.fixture
def stats() -> NormStats:
    return NormStats(mean=40.0, std=10.0)


@pytest.fixture
def a_hat() -> np.ndarray:
    return np.full((4, 4), 0.25)


@pytest.fixture
def splits(rng):
    """Окна игрушечного ряда: 4 сенсора, H_in=6, H_out=3"""
    samples = [
        WindowSample(
            x=rng.normal(size=(4, 6)),
            y=rng.uniform(20.0, 60.0, size=(4, 3)),
            t_anchor=5 + i,
        )
        for i in range(24)
    ]
    return samples[:16], samples[16:20], samples[20:]


@pytest.fixture
def bank(rng):
    return {5 + i: rng.normal(size=(4, 16)) / 4.0 for i in range(24)}
