import numpy as np
import numpy.testing as npt
import pytest

from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.graph.network import (
    RoadNetwork,
    build_adjacency_gaussian,
    build_network_from_sensors,
    grid_sensors,
    haversine_distances,
    normalize_adjacency,
)
from fuse_traffic.schemas.events import Sensor


def _three_sensor_distances():
    return np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])


def test_gaussian_weights_hand_case():
    net = build_adjacency_gaussian(_three_sensor_distances(), sigma=2.0, threshold=0.1)
    a = net.adjacency
    npt.assert_allclose(a[0, 1], np.exp(-0.25))
    npt.assert_allclose(a[0, 2], np.exp(-1.0))
    npt.assert_allclose(a[1, 2], np.exp(-2.25))
    npt.assert_array_equal(np.diag(a), np.zeros(3))


def test_zero_distance_gives_unit_weight_and_far_pairs_are_cut():
    d = np.array([[0.0, 0.0, 50.0], [0.0, 0.0, 50.0], [50.0, 50.0, 0.0]])
    a = build_adjacency_gaussian(d, sigma=2.0, threshold=0.1).adjacency
    assert a[0, 1] == 1.0
    assert a[0, 2] == 0.0


@pytest.mark.parametrize(
    "bad",
    [
        np.array([[0.0, 1.0], [2.0, 0.0]]),
        np.array([[0.0, -1.0], [-1.0, 0.0]]),
        np.array([[1.0, 1.0], [1.0, 0.0]]),
    ],
)
def test_invalid_distances_rejected(bad):
    with pytest.raises(DataValidationError):
        build_adjacency_gaussian(bad, sigma=1.0)


def test_asymmetric_adjacency_is_symmetrized_with_warning(caplog_loguru):
    sensors = [Sensor(id=i, lat=0.0, lon=0.0) for i in range(2)]
    net = RoadNetwork.from_adjacency(sensors, np.array([[0.0, 1.0], [0.0, 0.0]]))
    npt.assert_array_equal(net.adjacency, [[0.0, 0.5], [0.5, 0.0]])
    assert any("not symmetric" in m for m in caplog_loguru)


def test_normalize_single_node_and_pair():
    single = RoadNetwork(sensors=[Sensor(id=0, lat=0.0, lon=0.0)], adjacency=np.zeros((1, 1)))
    npt.assert_array_equal(normalize_adjacency(single), [[1.0]])
    sensors = [Sensor(id=i, lat=0.0, lon=0.0) for i in range(2)]
    pair = RoadNetwork.from_adjacency(sensors, np.array([[0.0, 1.0], [1.0, 0.0]]))
    npt.assert_allclose(normalize_adjacency(pair), np.full((2, 2), 0.5))


def test_normalized_adjacency_symmetric_and_bounded(rng):
    w = rng.random((5, 5))
    w = (w + w.T) / 2.0
    sensors = [Sensor(id=i, lat=0.0, lon=0.0) for i in range(5)]
    a_hat = normalize_adjacency(RoadNetwork.from_adjacency(sensors, w))
    assert np.abs(a_hat - a_hat.T).max() < 1e-12
    assert np.abs(np.linalg.eigvalsh(a_hat)).max() <= 1.0 + 1e-9


def test_normalization_is_permutation_equivariant(rng):
    net = build_network_from_sensors(grid_sensors(6, 34.05, -118.24, 1.0))
    perm = rng.permutation(6)
    expected = normalize_adjacency(net)[np.ix_(perm, perm)]
    npt.assert_allclose(normalize_adjacency(net.permuted(perm)), expected, atol=1e-12)


def test_haversine_is_symmetric_with_zero_diagonal():
    d = haversine_distances(grid_sensors(9, 37.77, -122.42, 2.0))
    npt.assert_array_equal(d, d.T)
    npt.assert_array_equal(np.diag(d), np.zeros(9))
    # соседи по сетке примерно в 2 км
    assert 1.9 < d[0, 1] < 2.1


def test_rebuilding_from_implied_distances_is_idempotent():
    sigma, threshold = 2.0, 0.1
    net = build_adjacency_gaussian(_three_sensor_distances(), sigma=sigma, threshold=threshold)
    a = net.adjacency
    with np.errstate(divide="ignore"):
        implied = np.where(a > 0, sigma * np.sqrt(-np.log(np.where(a > 0, a, 1.0))), 1e6)
    np.fill_diagonal(implied, 0.0)
    implied = np.minimum(implied, implied.T)
    rebuilt = build_adjacency_gaussian(implied, sigma=sigma, threshold=threshold).adjacency
    nonzero = a > 0
    npt.assert_allclose(rebuilt[nonzero], a[nonzero], rtol=1e-12)


def test_duplicate_sensor_ids_rejected():
    sensors = [Sensor(id=0, lat=0.0, lon=0.0), Sensor(id=0, lat=1.0, lon=1.0)]
    with pytest.raises(DataValidationError):
        haversine_distances(sensors)
