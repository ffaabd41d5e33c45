import numpy as np
import numpy.testing as npt
import pytest

from fuse_traffic.core.errors import ShapeError
from fuse_traffic.nn.tensor import (
    Parameter,
    Tensor,
    layer_norm_rows,
    matmul,
    mul,
    relu,
    shift_axis,
    softmax_rows,
    sum_all,
)


def test_matmul_identity_and_hand_case():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    npt.assert_array_equal(matmul(np.eye(2), m).data, m)
    out = matmul(m, np.array([[0.0], [1.0]]))
    npt.assert_array_equal(out.data, [[2.0], [4.0]])


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\) x \(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_batched_matmul_reduces_parameter_grad():
    w = Parameter(np.arange(6.0).reshape(3, 2), "w")
    x = np.ones((4, 5, 3))
    loss = sum_all(matmul(x, w))
    loss.backward()
    assert matmul(x, w).shape == (4, 5, 2)
    npt.assert_allclose(w.grad, np.full((3, 2), 20.0))


def test_gradients_allocated_on_first_access():
    w = Parameter(np.ones((3, 2)), "w")
    hidden = relu(matmul(np.ones((4, 3)), w))
    assert hidden._grad is None and w._grad is None
    npt.assert_array_equal(w.grad, np.zeros((3, 2)))

    sum_all(hidden).backward()
    npt.assert_allclose(w.grad, np.full((3, 2), 4.0))


def test_softmax_rows_cases():
    npt.assert_allclose(softmax_rows(np.array([[0.0, 0.0]])).data, [[0.5, 0.5]])
    big = softmax_rows(np.array([[1000.0, 0.0]])).data
    assert np.isfinite(big).all()
    npt.assert_allclose(big, [[1.0, 0.0]], atol=1e-12)
    row = np.array([1.0, 2.0, 3.0], dtype=np.longdouble)
    oracle = np.exp(row) / np.exp(row).sum()
    npt.assert_allclose(softmax_rows(np.array([[1.0, 2.0, 3.0]])).data[0], oracle.astype(float), atol=1e-12)


def test_softmax_rows_sum_to_one(rng):
    for _ in range(50):
        m = rng.normal(scale=rng.uniform(0.1, 50.0), size=(5, 7))
        npt.assert_allclose(softmax_rows(m).data.sum(axis=1), 1.0, atol=1e-6)


def _ln_params(cols):
    return Parameter(np.ones((1, cols)), "g"), Parameter(np.zeros((1, cols)), "b")


def test_layer_norm_constant_row_collapses_to_zero():
    g, b = _ln_params(4)
    npt.assert_array_equal(layer_norm_rows(np.full((1, 4), 3.0), g, b).data, np.zeros((1, 4)))


def test_layer_norm_standardized_row_is_unchanged():
    g, b = _ln_params(2)
    out = layer_norm_rows(np.array([[-1.0, 1.0]]), g, b, eps=1e-12)
    npt.assert_allclose(out.data, [[-1.0, 1.0]], atol=1e-9)


def test_layer_norm_moments(rng):
    g, b = _ln_params(4)
    out = layer_norm_rows(rng.normal(size=(3, 4)), g, b, eps=1e-12).data
    assert np.abs(out.mean(axis=1)).max() < 1e-9
    npt.assert_allclose(out.var(axis=1), 1.0, atol=1e-6)


def test_layer_norm_rejects_bad_gamma_shape():
    with pytest.raises(ShapeError):
        layer_norm_rows(np.ones((2, 3)), Parameter(np.ones(3), "g"), Parameter(np.zeros(3), "b"))


def test_frozen_parameter_gets_zero_grad(rng):
    frozen = Parameter(rng.normal(size=(3, 3)), "frozen", trainable=False)
    live = Parameter(rng.normal(size=(3, 3)), "live")
    sum_all(relu(matmul(frozen, live))).backward()
    npt.assert_array_equal(frozen.grad, np.zeros((3, 3)))
    assert np.abs(live.grad).sum() > 0


def test_shift_axis_is_causal():
    a = Tensor(np.arange(4.0).reshape(4, 1))
    npt.assert_array_equal(shift_axis(a, 0, 1).data[:, 0], [0.0, 0.0, 1.0, 2.0])
    npt.assert_array_equal(shift_axis(a, 0, 9).data, np.zeros((4, 1)))


def test_ops_are_deterministic(rng):
    a, b = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    first = mul(matmul(a, b), softmax_rows(a)).data
    second = mul(matmul(a, b), softmax_rows(a)).data
    assert first.tobytes() == second.tobytes()
