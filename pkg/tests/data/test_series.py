from datetime import datetime

import numpy as np
import numpy.testing as npt
import pytest

from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.data.series import (
    NormStats,
    TrafficSeries,
    denormalize,
    fit_normalizer,
    normalize,
    normalize_values,
)


def _series(values) -> TrafficSeries:
    return TrafficSeries(
        values=np.asarray(values, dtype=np.float64),
        interval_minutes=5,
        start_time=datetime(2012, 3, 1),
    )


def test_missing_values_excluded_from_stats():
    stats = fit_normalizer(_series([[0.0, 2.0, 4.0]]), range(0, 3))
    assert stats.mean == 3.0
    assert stats.std == 1.0


def test_constant_series_floors_std(caplog_loguru):
    stats = fit_normalizer(_series([[5.0, 5.0, 5.0]]), range(0, 3))
    assert stats.std == pytest.approx(1e-6)
    assert caplog_loguru


def test_all_missing_training_range_is_an_error():
    with pytest.raises(DataValidationError):
        fit_normalizer(_series([[0.0, 0.0, 3.0]]), range(0, 2))


def test_stats_are_global_scalars(rng):
    series = _series(rng.uniform(10, 70, size=(207, 50)))
    stats = fit_normalizer(series, range(0, 40))
    assert isinstance(stats.mean, float) and isinstance(stats.std, float)


def test_stats_ignore_values_outside_training_range(rng):
    values = rng.uniform(10, 70, size=(3, 40))
    before = fit_normalizer(_series(values), range(0, 28))
    mutated = values.copy()
    mutated[:, 28:] = 1000.0
    after = fit_normalizer(_series(mutated), range(0, 28))
    assert before == after


def test_normalize_hand_case_and_identity():
    stats = NormStats(mean=3.0, std=1.0)
    npt.assert_array_equal(normalize_values(np.array([[2.0, 4.0]]), stats), [[-1.0, 1.0]])
    x = np.array([[1.5, 2.5]])
    npt.assert_array_equal(normalize_values(x, NormStats(mean=0.0, std=1.0)), x)


def test_missing_stays_zero_and_mask_survives():
    normalized = normalize(_series([[0.0, 3.0, 5.0]]), NormStats(mean=3.0, std=2.0))
    npt.assert_array_equal(normalized.values, [[0.0, 0.0, 1.0]])
    npt.assert_array_equal(normalized.mask, [[False, True, True]])


def test_round_trip(rng):
    x = rng.uniform(1, 80, size=(6, 9))
    stats = NormStats(mean=41.0, std=7.5)
    assert np.abs(denormalize(normalize_values(x, stats), stats) - x).max() < 1e-9


def test_negative_observation_rejected():
    with pytest.raises(DataValidationError):
        _series([[1.0, -2.0]])
