from .series import NormStats, TrafficSeries, denormalize, fit_normalizer, normalize, normalize_values
from .windows import (
    DatasetSplit,
    WindowSample,
    chronological_split,
    make_windows,
    normalize_windows,
    split_sizes,
    stack_samples,
    window_count,
)

__all__ = [
    "DatasetSplit",
    "NormStats",
    "TrafficSeries",
    "WindowSample",
    "chronological_split",
    "denormalize",
    "fit_normalizer",
    "make_windows",
    "normalize",
    "normalize_values",
    "normalize_windows",
    "split_sizes",
    "stack_samples",
    "window_count",
]
