from .evaluation import (
    MetricReport,
    StratumReport,
    assign_strata,
    compute,
    per_horizon,
    stratify,
)

__all__ = ["MetricReport", "StratumReport", "assign_strata", "compute", "per_horizon", "stratify"]
