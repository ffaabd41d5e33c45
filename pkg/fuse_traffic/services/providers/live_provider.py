from __future__ import annotations

from fuse_traffic.adapters.llm.client import EventApiClient
from fuse_traffic.schemas.events import QueryKey

from .base import EventProvider


class LiveEventProvider(EventProvider):
    """HTTP JSON провайдер; включается только явным provider=live."""

    slug = "live"
    rate_limited = True

    def __init__(self, client: EventApiClient):
        self.client = client
        self.calls = 0

    async def fetch(self, key: QueryKey, prompt: str) -> str:
        self.calls += 1
        return await self.client.complete(prompt)

    async def aclose(self) -> None:
        await self.client.aclose()
