from __future__ import annotations

from typing import Dict, Optional

from langchain_openai import ChatOpenAI

from fuse_traffic.adapters.llm.client import EventApiClient
from fuse_traffic.core.config import settings
from fuse_traffic.core.errors import ConfigurationError
from fuse_traffic.schemas.config import EventsSection

from .base import EventProvider
from .chat_provider import ChatEventProvider
from .live_provider import LiveEventProvider
from .mock_provider import MockEventProvider


class ProviderRegistry:
    """Реестр провайдеров событий."""

    def __init__(self):
        self._providers: dict[str, EventProvider] = {}

    def get(
        self, config: EventsSection, fixture: Optional[Dict[str, str]] = None
    ) -> EventProvider:
        if config.provider == "mock":
            return self.get_mock(config, fixture)
        if config.provider == "live":
            return self.get_live(config)
        return self.get_chat(config)

    def get_mock(
        self, config: EventsSection, fixture: Optional[Dict[str, str]] = None
    ) -> EventProvider:
        # фикстура в памяти не кешируется: она зависит от шаблона и датасета
        if fixture is not None:
            return MockEventProvider(fixture)
        if config.fixture_path is None:
            return MockEventProvider({})
        key = f"mock:{config.fixture_path}"
        provider = self._providers.get(key)
        if provider is None:
            provider = MockEventProvider.from_file(config.fixture_path)
            self._providers[key] = provider
        return provider

    def get_live(self, config: EventsSection) -> EventProvider:
        if not config.endpoint:
            raise ConfigurationError("provider=live requires events.endpoint in the config")
        key = f"live:{config.endpoint}"
        provider = self._providers.get(key)
        if provider is None:
            client = EventApiClient(
                endpoint=config.endpoint,
                token=settings.LIVE_API_TOKEN,
                timeout_ms=config.timeout_ms,
            )
            provider = LiveEventProvider(client)
            self._providers[key] = provider
        return provider

    def get_chat(self, config: EventsSection) -> EventProvider:
        if not settings.OPENAI_API_KEY:
            raise ConfigurationError("provider=chat requires FUSE_OPENAI_API_KEY in the environment")
        key = f"chat:{config.chat_model}:{config.chat_base_url or 'default'}"
        provider = self._providers.get(key)
        if provider is None:
            llm = ChatOpenAI(
                model=config.chat_model,
                api_key=settings.OPENAI_API_KEY,
                base_url=config.chat_base_url,
                temperature=0,
                timeout=config.timeout_ms / 1000.0,
                max_retries=0,
            )
            provider = ChatEventProvider(llm)
            self._providers[key] = provider
        return provider

    async def aclose(self) -> None:
        for provider in self._providers.values():
            await provider.aclose()
        self._providers.clear()
