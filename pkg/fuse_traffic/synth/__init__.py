from .generator import (
    baseline_speeds,
    event_profile,
    event_records,
    generate,
    impact_factors,
    plateau_range,
    script_events,
)
from .templates import render_event_text

__all__ = [
    "baseline_speeds",
    "event_profile",
    "event_records",
    "generate",
    "impact_factors",
    "plateau_range",
    "render_event_text",
    "script_events",
]
