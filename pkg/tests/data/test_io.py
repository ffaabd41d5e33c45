from datetime import datetime

import numpy as np
import numpy.testing as npt
import pytest

from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.data import io as dataset_io
from fuse_traffic.data.series import TrafficSeries


def test_series_round_trip(tmp_path, rng):
    series = TrafficSeries(
        values=np.round(rng.uniform(0, 70, size=(3, 12)), 4),
        interval_minutes=5,
        start_time=datetime(2012, 3, 1, 0, 0),
        kind="speed",
    )
    dataset_io.save_series(series, tmp_path)
    loaded = dataset_io.load_series(tmp_path)
    npt.assert_allclose(loaded.values, series.values, rtol=1e-12)
    assert loaded.start_time == series.start_time
    assert loaded.interval_minutes == 5


def test_sidecar_mismatch_is_rejected(tmp_path, rng):
    series = TrafficSeries(
        values=rng.uniform(1, 70, size=(2, 5)), interval_minutes=5, start_time=datetime(2012, 3, 1)
    )
    dataset_io.save_series(series, tmp_path)
    sidecar = tmp_path / dataset_io.SERIES_SIDECAR
    sidecar.write_text(sidecar.read_text().replace('"n": 2', '"n": 3'))
    with pytest.raises(DataValidationError):
        dataset_io.load_series(tmp_path)


def test_distances_mirror_and_fill_missing(tmp_path):
    path = tmp_path / "distances.csv"
    path.write_text("from,to,km\n0,1,1.5\n1,2,2.0\n2,1,2.0\n")
    d = dataset_io.load_distances(path, 3)
    assert d[1, 0] == 1.5 and d[0, 1] == 1.5
    assert np.isinf(d[0, 2])


def test_conflicting_directions_rejected(tmp_path):
    path = tmp_path / "distances.csv"
    path.write_text("from,to,km\n0,1,1.5\n1,0,2.5\n")
    with pytest.raises(DataValidationError):
        dataset_io.load_distances(path, 2)


def test_sensors_must_be_dense(tmp_path):
    path = tmp_path / "sensors.csv"
    path.write_text("id,lat,lon\n0,34.0,-118.0\n2,34.1,-118.1\n")
    with pytest.raises(DataValidationError):
        dataset_io.load_sensors(path)


def test_external_embeddings(tmp_path):
    path = tmp_path / "emb.csv"
    path.write_text("sensor_id,e0,e1\n0,1.0,0.0\n1,0.0,2.0\n")
    vectors = dataset_io.load_external_embeddings(path, d_text=2)
    npt.assert_array_equal(vectors[1], [0.0, 2.0])
    with pytest.raises(DataValidationError):
        dataset_io.load_external_embeddings(path, d_text=3)


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        dataset_io.load_series(tmp_path / "nowhere")
