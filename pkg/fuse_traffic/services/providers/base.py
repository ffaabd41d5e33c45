from __future__ import annotations

from abc import ABC, abstractmethod

from fuse_traffic.schemas.config import ProviderSlug
from fuse_traffic.schemas.events import QueryKey


class EventProvider(ABC):
    """Базовый интерфейс провайдера событий."""

    slug: ProviderSlug
    # лимит частоты и параллелизма применяется только к сетевым провайдерам
    rate_limited: bool = False

    @abstractmethod
    async def fetch(self, key: QueryKey, prompt: str) -> str:
        """Сырой текст ответа (JSON события) для ключа запроса."""
        raise NotImplementedError

    async def aclose(self) -> None:
        return None
