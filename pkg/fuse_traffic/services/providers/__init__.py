from .base import EventProvider
from .chat_provider import ChatEventProvider
from .live_provider import LiveEventProvider
from .mock_provider import EMPTY_RESPONSE, MockEventProvider
from .registry import ProviderRegistry

__all__ = [
    "EMPTY_RESPONSE",
    "ChatEventProvider",
    "EventProvider",
    "LiveEventProvider",
    "MockEventProvider",
    "ProviderRegistry",
]
