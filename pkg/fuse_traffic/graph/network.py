"""Дорожная сеть: сенсоры, гауссово ядро расстояний, нормализация смежности"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from fuse_traffic.core.constants import DEFAULT_ADJ_THRESHOLD, EARTH_RADIUS_KM
from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.nn.tensor import Matrix
from fuse_traffic.schemas.events import Sensor


@dataclass(frozen=True, eq=False)
class RoadNetwork:
    """Неизменяемый граф G = {V, A}; диагональ A нулевая (петли добавляет нормализация)"""

    sensors: List[Sensor]
    adjacency: Matrix

    def __post_init__(self) -> None:
        n = len(self.sensors)
        if self.adjacency.shape != (n, n):
            raise DataValidationError(
                f"adjacency shape {self.adjacency.shape} does not match {n} sensors"
            )
        self.adjacency.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.sensors)

    @classmethod
    def from_adjacency(cls, sensors: Sequence[Sensor], adjacency: Matrix) -> "RoadNetwork":
        """Граф по готовой матрице весов; несимметричный вход симметризуется"""
        a = np.array(adjacency, dtype=np.float64)
        if np.any(a < 0.0) or np.any(a > 1.0) or not np.all(np.isfinite(a)):
            raise DataValidationError("adjacency weights must lie in [0, 1]")
        if not np.array_equal(a, a.T):
            logger.warning("⚠️ Adjacency is not symmetric, using (A + A^T) / 2")
            a = 0.5 * (a + a.T)
        np.fill_diagonal(a, 0.0)
        return cls(sensors=list(sensors), adjacency=a)

    def neighbors(self, node: int) -> List[int]:
        return [int(j) for j in np.flatnonzero(self.adjacency[node] > 0.0) if j != node]

    def permuted(self, perm: Sequence[int]) -> "RoadNetwork":
        """Сеть с переставленными узлами: новый узел i это старый perm[i]"""
        idx = np.asarray(perm)
        sensors = [
            Sensor(id=i, lat=self.sensors[p].lat, lon=self.sensors[p].lon)
            for i, p in enumerate(idx)
        ]
        return RoadNetwork(sensors=sensors, adjacency=self.adjacency[np.ix_(idx, idx)].copy())


def check_sensors(sensors: Sequence[Sensor]) -> None:
    ids = [s.id for s in sensors]
    if sorted(ids) != list(range(len(ids))):
        raise DataValidationError("sensor ids must be dense and unique in [0, N)")


def haversine_distances(sensors: Sequence[Sensor]) -> Matrix:
    """Попарные расстояния по большому кругу, км"""
    check_sensors(sensors)
    ordered = sorted(sensors, key=lambda s: s.id)
    lat = np.radians([s.lat for s in ordered])
    lon = np.radians([s.lon for s in ordered])
    dlat = lat[:, None] - lat[None, :]
    dlon = lon[:, None] - lon[None, :]
    h = np.sin(dlat / 2.0) ** 2 + np.cos(lat)[:, None] * np.cos(lat)[None, :] * np.sin(dlon / 2.0) ** 2
    d = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
    # симметрия побитово, не только численно
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return d


def default_sigma(distances: Matrix) -> float:
    """Выборочное СКО ненулевых конечных попарных расстояний"""
    upper = distances[np.triu_indices_from(distances, k=1)]
    values = upper[np.isfinite(upper) & (upper > 0.0)]
    if values.size < 2:
        return float(values[0]) if values.size == 1 else 1.0
    sigma = float(np.std(values, ddof=1))
    return sigma if sigma > 0.0 else float(values[0])


def _validate_distances(distances: Matrix) -> None:
    if distances.ndim != 2 or distances.shape[0] != distances.shape[1]:
        raise DataValidationError(f"distance matrix must be square, got {distances.shape}")
    if np.any(np.isnan(distances)):
        raise DataValidationError("distance matrix contains NaN")
    if np.any(distances < 0.0):
        raise DataValidationError("distance matrix contains negative entries")
    if not np.array_equal(distances, distances.T):
        raise DataValidationError("distance matrix is not symmetric")
    if np.any(np.diag(distances) != 0.0):
        raise DataValidationError("distance matrix must have a zero diagonal")


def build_adjacency_gaussian(
    distances: Matrix,
    sigma: Optional[float] = None,
    threshold: float = DEFAULT_ADJ_THRESHOLD,
    sensors: Optional[Sequence[Sensor]] = None,
) -> RoadNetwork:
    """
    Пороговое гауссово ядро: w_ij = exp(-d_ij^2 / sigma^2), если w_ij >= threshold, иначе 0.

    Бесконечное расстояние (нет пары в файле) даёт вес 0.
    """
    d = np.asarray(distances, dtype=np.float64)
    _validate_distances(d)
    if sigma is None:
        sigma = default_sigma(d)
    if sigma <= 0.0:
        raise DataValidationError(f"sigma must be positive, got {sigma}")
    if not 0.0 <= threshold < 1.0:
        raise DataValidationError(f"threshold must be in [0, 1), got {threshold}")

    with np.errstate(over="ignore"):
        w = np.exp(-np.square(d) / (sigma * sigma))
    w[w < threshold] = 0.0
    np.fill_diagonal(w, 0.0)

    n = d.shape[0]
    if sensors is None:
        sensors = [Sensor(id=i, lat=0.0, lon=0.0) for i in range(n)]
    elif len(sensors) != n:
        raise DataValidationError(f"{len(sensors)} sensors for a {n}x{n} distance matrix")
    else:
        check_sensors(sensors)
        sensors = sorted(sensors, key=lambda s: s.id)

    edges = int(np.count_nonzero(w)) // 2
    logger.debug(f"Built gaussian adjacency: {n} nodes, {edges} edges, sigma={sigma:.4f} km")
    return RoadNetwork(sensors=list(sensors), adjacency=w)


def build_network_from_sensors(
    sensors: Sequence[Sensor],
    sigma: Optional[float] = None,
    threshold: float = DEFAULT_ADJ_THRESHOLD,
) -> RoadNetwork:
    return build_adjacency_gaussian(haversine_distances(sensors), sigma, threshold, sensors)


def normalize_adjacency(net: RoadNetwork) -> Matrix:
    """Â = D^{-1/2} (A + I) D^{-1/2}"""
    a = net.adjacency + np.eye(net.n)
    inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    a_hat = inv_sqrt[:, None] * a * inv_sqrt[None, :]
    return a_hat


def grid_sensors(n: int, origin_lat: float, origin_lon: float, spacing_km: float) -> List[Sensor]:
    """Сенсоры на квадратной сетке вокруг начала координат (для синтетики)"""
    side = int(np.ceil(np.sqrt(n)))
    dlat = spacing_km / 110.574
    dlon = spacing_km / (111.320 * np.cos(np.radians(origin_lat)))
    sensors = []
    for i in range(n):
        row, col = divmod(i, side)
        sensors.append(
            Sensor(
                id=i,
                lat=round(origin_lat + (row - side / 2.0) * dlat, 6),
                lon=round(origin_lon + (col - side / 2.0) * dlon, 6),
            )
        )
    return sensors
