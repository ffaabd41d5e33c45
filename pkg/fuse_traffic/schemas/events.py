from __future__ import annotations

from datetime import datetime
from enum import Enum
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from fuse_traffic.core.constants import TIMESTAMP_FORMAT

EventCategory = Literal["accident", "concert", "weather", "crime"]
TemplateId = Literal["P1", "P2", "P3", "P4", "P5"]


class Impact(str, Enum):
    """Класс влияния события на трафик"""

    none = "none"
    minor = "minor"
    moderate = "moderate"
    high = "high"

    @property
    def rank(self) -> int:
        return _IMPACT_ORDER.index(self)

    @property
    def label(self) -> str:
        return _IMPACT_LABELS[self]

    @classmethod
    def parse(cls, value: object) -> "Impact":
        """Разбор метки из ответа LLM; неизвестное значение → Minor"""
        if isinstance(value, Impact):
            return value
        text = str(value or "").strip().lower().replace("_", " ")
        text = text.removesuffix(" impact").strip()
        for impact in cls:
            if text == impact.value:
                return impact
        if text in ("no", "n/a", "nothing"):
            return cls.none
        return cls.minor

    @classmethod
    def ordered(cls) -> List["Impact"]:
        return list(_IMPACT_ORDER)


_IMPACT_ORDER = (Impact.none, Impact.minor, Impact.moderate, Impact.high)
_IMPACT_LABELS = {
    Impact.none: "No Impact",
    Impact.minor: "Minor Impact",
    Impact.moderate: "Moderate Impact",
    Impact.high: "High Impact",
}


class Sensor(BaseModel):
    """Сенсор дорожной сети"""

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0)
    lat: float = Field(..., ge=-90.0, le=90.0)
    lon: float = Field(..., ge=-180.0, le=180.0)


class EventRecord(BaseModel):
    """Событие, привязанное к сенсору и окну времени"""

    node_id: int = Field(..., ge=0)
    window_start: datetime
    window_end: datetime
    impact: Impact
    text: str = ""
    category: Optional[EventCategory] = None

    @model_validator(mode="after")
    def _check(self) -> "EventRecord":
        if self.window_start > self.window_end:
            raise ValueError("window_start must not be after window_end")
        if (self.text == "") != (self.impact == Impact.none):
            raise ValueError("text must be empty exactly when impact is none")
        return self

    def overlaps(self, start: datetime, end: datetime) -> bool:
        return self.window_start <= end and start <= self.window_end


class SynthEvent(BaseModel):
    """Событие в сценарии синтетического генератора (индексы интервалов)"""

    nodes: List[int] = Field(..., min_length=1)
    start: int = Field(..., ge=0)
    duration: int = Field(..., ge=1)
    impact: Impact
    category: EventCategory = "accident"
    text: str = ""


class QueryKey(BaseModel):
    """Ключ дедупликации запроса: округлённое место, сетка времени, шаблон"""

    model_config = ConfigDict(frozen=True)

    lat_bucket: float
    lon_bucket: float
    time_bucket: datetime
    template_id: TemplateId

    @property
    def canonical(self) -> str:
        return (
            f"{self.lat_bucket:.3f}:{self.lon_bucket:.3f}:"
            f"{self.time_bucket.strftime('%Y-%m-%dT%H:%M')}:{self.template_id}"
        )

    def __str__(self) -> str:
        return self.canonical


class RetrievalStats(BaseModel):
    """Статистика одного прохода поиска событий"""

    requests: int = 0
    unique_keys: int = 0
    provider_calls: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    fallbacks: int = 0
    retries: int = 0


def format_timestamp(ts: datetime) -> str:
    return ts.strftime(TIMESTAMP_FORMAT)


class PromptTemplate(BaseModel):
    """Шаблон запроса с плейсхолдерами {lat}, {lon}, {timestamp}, {window}"""

    model_config = ConfigDict(frozen=True)

    id: TemplateId
    body: str
