import numpy as np
import numpy.testing as npt
import pytest

from fuse_traffic.core.errors import MetricError
from fuse_traffic.data.series import NormStats
from fuse_traffic.nn.tensor import Parameter
from fuse_traffic.training import masked_mae

STATS = NormStats(mean=10.0, std=2.0)


def test_hand_case_in_original_units():
    pred = Parameter(np.array([[0.0, 1.0]]), "pred")
    y = np.array([[11.0, 0.0]])
    loss = masked_mae(pred, y, y != 0.0, STATS)
    assert loss.item() == pytest.approx(1.0)


def test_masked_entries_have_no_value_or_gradient(rng):
    pred = Parameter(rng.normal(size=(3, 4)), "pred")
    y = rng.uniform(5.0, 15.0, size=(3, 4))
    mask = rng.random((3, 4)) > 0.4
    mask[0, 0] = True
    loss = masked_mae(pred, y, mask, STATS)
    loss.backward()
    npt.assert_array_equal(pred.grad[~mask], 0.0)
    assert np.abs(pred.grad[mask]).min() > 0

    y_changed = y.copy()
    y_changed[~mask] = 1e6
    assert masked_mae(pred, y_changed, mask, STATS).item() == loss.item()


def test_gradient_is_sign_times_std_over_count():
    pred = Parameter(np.array([[1.0, -1.0, 0.0]]), "pred")
    y = np.array([[10.0, 10.0, 0.0]])
    masked_mae(pred, y, y != 0.0, STATS).backward()
    npt.assert_allclose(pred.grad, [[1.0, -1.0, 0.0]])


def test_empty_mask_is_an_error():
    pred = Parameter(np.zeros((1, 2)), "pred")
    with pytest.raises(MetricError):
        masked_mae(pred, np.zeros((1, 2)), np.zeros((1, 2), dtype=bool), STATS)


def test_shape_mismatch_is_an_error():
    pred = Parameter(np.zeros((1, 2)), "pred")
    with pytest.raises(MetricError):
        masked_mae(pred, np.ones((2, 1)), np.ones((2, 1), dtype=bool), STATS)
