from .network import (
    RoadNetwork,
    build_adjacency_gaussian,
    build_network_from_sensors,
    default_sigma,
    grid_sensors,
    haversine_distances,
    normalize_adjacency,
)

__all__ = [
    "RoadNetwork",
    "build_adjacency_gaussian",
    "build_network_from_sensors",
    "default_sigma",
    "grid_sensors",
    "haversine_distances",
    "normalize_adjacency",
]
