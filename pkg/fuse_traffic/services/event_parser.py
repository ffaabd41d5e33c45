from __future__ import annotations

import json
from datetime import datetime
from typing import Any, List, Tuple, Union

from loguru import logger

from fuse_traffic.core.errors import ResponseParseError
from fuse_traffic.schemas.events import EventRecord, Impact

Window = Tuple[datetime, datetime]


def split_events(text: str) -> List[str]:
    """Разбиение по запятым вне скобок"""
    parts, current, depth = [], [], 0
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}" and depth > 0:
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
            continue
        current.append(ch)
    parts.append("".join(current))
    return [p.strip() for p in parts if p.strip()]


def _load_json(raw: Union[str, bytes]) -> Any:
    if isinstance(raw, (bytes, bytearray)):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ResponseParseError(f"response is not valid UTF-8: {e}") from e
    if not isinstance(raw, str):
        raise ResponseParseError(f"response must be text, got {type(raw).__name__}")
    text = raw.strip()
    # ответ модели иногда обёрнут в markdown-блок
    if text.startswith("```"):
        text = text.strip("`")
        text = text.removeprefix("json").strip()
    try:
        return json.loads(text)
    except (json.JSONDecodeError, RecursionError):
        pass
    start, end = text.find("{"), text.rfind("}")
    if start != -1 and end > start:
        try:
            return json.loads(text[start : end + 1])
        except (json.JSONDecodeError, RecursionError):
            pass
    raise ResponseParseError(f"response is not valid JSON: {text[:80]!r}")


def _impacts_for(value: Any, count: int) -> List[Impact]:
    if value is None:
        return [Impact.minor] * count
    if isinstance(value, list):
        parsed = [Impact.parse(v) for v in value]
        return [parsed[i] if i < len(parsed) else Impact.minor for i in range(count)]
    return [Impact.parse(value)] * count


def none_record(window: Window, node_id: int = 0) -> EventRecord:
    return EventRecord(
        node_id=node_id, window_start=window[0], window_end=window[1], impact=Impact.none, text=""
    )


def parse_response(
    raw: Union[str, bytes], window: Window, node_id: int = 0
) -> List[EventRecord]:
    """
    Разбор JSON-ответа {"Event": "...", "Impact": "..."}.

    Пустое или отсутствующее поле "Event" даёт одну запись без влияния.
    Явная метка "No Impact" при непустом тексте тоже даёт запись без
    влияния: текст отбрасывается, чтобы не нарушать инвариант записи.
    """
    payload = _load_json(raw)
    if not isinstance(payload, dict):
        raise ResponseParseError(f"response JSON must be an object, got {type(payload).__name__}")

    event_field = payload.get("Event")
    if isinstance(event_field, list):
        texts = [str(item).strip() for item in event_field if str(item).strip()]
    elif isinstance(event_field, str):
        texts = split_events(event_field)
    else:
        texts = []
    if not texts:
        return [none_record(window, node_id)]
    impacts = _impacts_for(payload.get("Impact"), len(texts))

    records = []
    for text, impact in zip(texts, impacts):
        if impact == Impact.none:
            logger.debug(f"Dropping event text labelled as no impact: {text!r}")
            continue
        records.append(
            EventRecord(
                node_id=node_id,
                window_start=window[0],
                window_end=window[1],
                impact=impact,
                text=text,
            )
        )
    return records or [none_record(window, node_id)]
