from __future__ import annotations

import json
from pathlib import Path
from typing import Dict

from loguru import logger

from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.core.utils import read_json
from fuse_traffic.schemas.events import QueryKey

from .base import EventProvider

EMPTY_RESPONSE = json.dumps({"Event": ""})


class MockEventProvider(EventProvider):
    """Детерминированный провайдер: ответ зависит только от (ключ, фикстура)."""

    slug = "mock"

    def __init__(self, fixture: Dict[str, str]):
        self.fixture = dict(fixture)
        self.calls = 0

    @classmethod
    def from_file(cls, path: Path) -> "MockEventProvider":
        """Фикстура: JSON-объект canonical QueryKey → ответ (строка или объект JSON)"""
        data = read_json(path)
        if not isinstance(data, dict):
            raise DataValidationError(f"fixture {path} must be a JSON object")
        fixture = {
            str(k): v if isinstance(v, str) else json.dumps(v, sort_keys=True)
            for k, v in data.items()
        }
        logger.info(f"📦 Loaded mock fixture with {len(fixture)} responses from {path}")
        return cls(fixture)

    async def fetch(self, key: QueryKey, prompt: str) -> str:
        self.calls += 1
        return self.fixture.get(key.canonical, EMPTY_RESPONSE)
