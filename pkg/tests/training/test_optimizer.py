import numpy as np
import numpy.testing as npt
import pytest

from fuse_traffic.nn.tensor import Parameter
from fuse_traffic.training import Adam


def test_zero_learning_rate_leaves_parameters(rng):
    p = Parameter(rng.normal(size=(3, 3)), "p")
    before = p.data.copy()
    opt = Adam([p], lr=0.0)
    for _ in range(5):
        p.grad = rng.normal(size=(3, 3))
        opt.step()
    npt.assert_array_equal(p.data, before)
    assert opt.steps == 5


def test_first_step_moves_by_learning_rate_against_gradient(rng):
    p = Parameter(np.zeros((2, 2)), "p")
    p.grad = np.array([[2.0, -0.5], [1e-3, -4.0]])
    Adam([p], lr=0.01).step()
    npt.assert_allclose(p.data, -0.01 * np.sign(p.grad), rtol=1e-4)


def test_frozen_parameters_are_skipped(rng):
    frozen = Parameter(rng.normal(size=(2,)), "frozen", trainable=False)
    live = Parameter(rng.normal(size=(2,)), "live")
    opt = Adam([frozen, live], lr=0.1)
    assert opt.params == [live]
    before = frozen.data.copy()
    frozen.grad = np.ones(2)
    live.grad = np.ones(2)
    opt.step()
    npt.assert_array_equal(frozen.data, before)


def test_zero_grad_clears_accumulators(rng):
    p = Parameter(rng.normal(size=(2, 2)), "p")
    p.grad = np.ones((2, 2))
    opt = Adam([p])
    opt.zero_grad()
    npt.assert_array_equal(p.grad, np.zeros((2, 2)))


def test_negative_learning_rate_rejected():
    with pytest.raises(ValueError):
        Adam([], lr=-1.0)
