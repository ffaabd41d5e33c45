from __future__ import annotations

import re
from datetime import datetime, timedelta
from typing import Dict, Tuple, Union

from fuse_traffic.core.constants import DEFAULT_INTERVAL_MINUTES
from fuse_traffic.core.errors import TemplateError
from fuse_traffic.prompts.event_prompts import EVENT_PROMPTS
from fuse_traffic.schemas.events import PromptTemplate, Sensor, TemplateId, format_timestamp

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def get_template(template_id: TemplateId) -> PromptTemplate:
    if template_id not in EVENT_PROMPTS:
        raise TemplateError(f"unknown prompt template: {template_id}")
    return PromptTemplate(id=template_id, body=EVENT_PROMPTS[template_id])


def prediction_window(
    anchor_time: datetime, h_out: int, interval_minutes: int = DEFAULT_INTERVAL_MINUTES
) -> Tuple[datetime, datetime]:
    """Настенное время шагов прогноза anchor+1 … anchor+H_out"""
    step = timedelta(minutes=interval_minutes)
    return anchor_time + step, anchor_time + step * h_out


def format_window(start: datetime, end: datetime) -> str:
    if start == end:
        return format_timestamp(start)
    return f"{format_timestamp(start)} to {format_timestamp(end)}"


def fill_placeholders(body: str, values: Dict[str, str]) -> str:
    def _sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise TemplateError(f"unknown placeholder {{{name}}} in prompt template")
        return values[name]

    return _PLACEHOLDER.sub(_sub, body)


def render_prompt(
    template: Union[PromptTemplate, TemplateId],
    sensor: Sensor,
    anchor_time: datetime,
    h_in: int,
    h_out: int,
    interval_minutes: int = DEFAULT_INTERVAL_MINUTES,
) -> str:
    """
    Текст запроса для сенсора и момента `anchor_time` (последний входной шаг).

    Окно запроса: шаги прогноза, выраженные настенным временем; при
    H_out = 1 это один интервал.
    """
    if h_in < 1 or h_out < 1:
        raise TemplateError(f"window lengths must be >= 1, got H_in={h_in}, H_out={h_out}")
    if isinstance(template, str):
        template = get_template(template)
    start, end = prediction_window(anchor_time, h_out, interval_minutes)
    return fill_placeholders(
        template.body,
        {
            "lat": f"{sensor.lat:.4f}",
            "lon": f"{sensor.lon:.4f}",
            "timestamp": format_timestamp(anchor_time),
            "window": format_window(start, end),
        },
    )
