import numpy as np
import numpy.testing as npt

from fuse_traffic.nn.rng import RngState, xavier_init


def test_xavier_bounds_single_value():
    value = xavier_init(1, 1, RngState(0).generator())
    assert abs(value[0, 0]) <= np.sqrt(3.0)


def test_same_seed_same_matrix():
    a = xavier_init(5, 7, RngState(42).stream("w"))
    b = xavier_init(5, 7, RngState(42).stream("w"))
    npt.assert_array_equal(a, b)


def test_named_streams_differ():
    state = RngState(42)
    assert not np.array_equal(state.stream("a").random(4), state.stream("b").random(4))


def test_xavier_variance():
    target = 2.0 / (64 + 64)
    for seed in range(10):
        w = xavier_init(64, 64, RngState(seed).generator())
        assert abs(w.var() - target) / target < 0.2
