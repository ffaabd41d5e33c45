from __future__ import annotations

from langchain_core.language_models.chat_models import BaseChatModel
from langchain_core.messages import HumanMessage, SystemMessage

from fuse_traffic.core.errors import RetrievalError
from fuse_traffic.prompts.event_prompts import EVENT_SYSTEM_PROMPT
from fuse_traffic.schemas.events import QueryKey

from .base import EventProvider


class ChatEventProvider(EventProvider):
    """Провайдер на chat-модели langchain (OpenAI-совместимый endpoint)."""

    slug = "chat"
    rate_limited = True

    def __init__(self, llm: BaseChatModel):
        self.llm = llm
        self.calls = 0

    async def fetch(self, key: QueryKey, prompt: str) -> str:
        self.calls += 1
        message = await self.llm.ainvoke(
            [SystemMessage(content=EVENT_SYSTEM_PROMPT), HumanMessage(content=prompt)]
        )
        content = message.content
        if isinstance(content, list):
            content = "".join(
                part if isinstance(part, str) else str(part.get("text", ""))
                for part in content
            )
        if not isinstance(content, str):
            raise RetrievalError(f"chat model returned {type(content).__name__} content")
        return content
