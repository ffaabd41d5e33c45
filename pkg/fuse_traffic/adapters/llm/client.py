from typing import Optional

import httpx
from loguru import logger

from fuse_traffic.core.constants import DEFAULT_TIMEOUT_MS
from fuse_traffic.core.errors import RetrievalError


class EventApiClient:
    """
    Тонкий HTTP JSON клиент live-провайдера событий.

    POST {"prompt": ...} → тело ответа либо сам JSON события, либо
    обёртка {"text": "<JSON события>"}. Повторы и лимиты на стороне
    сервиса поиска.
    """

    def __init__(
        self,
        endpoint: str,
        token: Optional[str],
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ):
        self.endpoint = endpoint
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.AsyncClient(
            headers=headers, timeout=timeout_ms / 1000.0, transport=transport
        )

    async def complete(self, prompt: str) -> str:
        try:
            response = await self._client.post(self.endpoint, json={"prompt": prompt})
        except httpx.TimeoutException as e:
            raise RetrievalError(f"event API timeout: {e}") from e
        except httpx.HTTPError as e:
            raise RetrievalError(f"event API transport error: {e}") from e

        if response.status_code != 200:
            logger.error(f"Event API error {response.status_code}: {response.text[:200]}")
            raise RetrievalError(f"event API returned HTTP {response.status_code}")

        try:
            payload = response.json()
        except ValueError:
            return response.text
        if isinstance(payload, dict) and isinstance(payload.get("text"), str):
            return payload["text"]
        return response.text

    async def aclose(self) -> None:
        await self._client.aclose()
