"""
Замороженные текстовые энкодеры: текст события сенсора -> строка N×d_text.

Контракт любого энкодера: непустой текст даёт строку с L2-нормой 1,
пустой текст даёт нулевую строку. Градиенты в энкодер не текут.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path
from typing import Dict, List, Mapping, Protocol, Sequence

import numpy as np
from loguru import logger

from fuse_traffic.core.constants import DEFAULT_D_TEXT
from fuse_traffic.core.errors import ConfigurationError, DataValidationError
from fuse_traffic.data.io import load_external_embeddings
from fuse_traffic.nn.tensor import Matrix

TextEmbedding = Matrix

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")
_BUCKET_PERSON = b"fuse-bucket"
_SIGN_PERSON = b"fuse-sign"


class TextEncoder(Protocol):
    d_text: int

    def embed(self, texts: Sequence[str]) -> TextEmbedding: ...


def tokenize(text: str) -> List[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def _hash64(token: str, person: bytes) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, person=person).digest()
    return int.from_bytes(digest, "little")


class HashingTextEncoder:
    """
    Хешированный мешок токенов.

    Токен попадает в корзину blake2b(token) mod d_text со знаком ±1 от
    второго, независимого хеша; сумма по токенам нормируется по L2.
    """

    def __init__(self, d_text: int = DEFAULT_D_TEXT):
        if d_text < 8:
            raise ConfigurationError(f"d_text must be at least 8, got {d_text}")
        self.d_text = d_text
        self._cache: Dict[str, np.ndarray] = {}

    def token_slot(self, token: str) -> tuple[int, float]:
        bucket = _hash64(token, _BUCKET_PERSON) % self.d_text
        sign = 1.0 if _hash64(token, _SIGN_PERSON) & 1 else -1.0
        return bucket, sign

    def embed_text(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        row = np.zeros(self.d_text, dtype=np.float64)
        for token in tokenize(text):
            bucket, sign = self.token_slot(token)
            row[bucket] += sign
        norm = float(np.linalg.norm(row))
        # токены могут взаимно погаситься: такая строка остаётся нулевой
        if norm > 0.0:
            row = row / norm
        row.setflags(write=False)
        self._cache[text] = row
        return row

    def embed(self, texts: Sequence[str]) -> TextEmbedding:
        if not texts:
            return np.zeros((0, self.d_text), dtype=np.float64)
        return np.stack([self.embed_text(t) for t in texts])


class ExternalEmbeddingEncoder:
    """
    Подстановка векторов внешнего предобученного энкодера.

    Вектор берётся по id сенсора (строка i соответствует сенсору i) и
    нормируется; сенсор без событий получает нулевую строку.
    """

    def __init__(self, vectors: Mapping[int, np.ndarray]):
        if not vectors:
            raise DataValidationError("external embeddings are empty")
        widths = {len(v) for v in vectors.values()}
        if len(widths) != 1:
            raise DataValidationError(f"external embeddings have mixed widths {sorted(widths)}")
        self.d_text = widths.pop()
        self._rows: Dict[int, np.ndarray] = {}
        for sensor_id, vector in vectors.items():
            v = np.asarray(vector, dtype=np.float64)
            norm = float(np.linalg.norm(v))
            if not np.isfinite(v).all() or norm == 0.0:
                raise DataValidationError(f"external embedding for sensor {sensor_id} is degenerate")
            self._rows[int(sensor_id)] = v / norm

    def embed(self, texts: Sequence[str]) -> TextEmbedding:
        out = np.zeros((len(texts), self.d_text), dtype=np.float64)
        for i, text in enumerate(texts):
            if not text:
                continue
            row = self._rows.get(i)
            if row is None:
                raise DataValidationError(f"no external embedding for sensor {i}")
            out[i] = row
        return out


def embed(texts: Sequence[str], d_text: int = DEFAULT_D_TEXT) -> TextEmbedding:
    return HashingTextEncoder(d_text).embed(texts)


def embed_batch(encoder: TextEncoder, batch: Sequence[Sequence[str]]) -> np.ndarray:
    """Стопка эмбеддингов (B, N, d_text) для минибатча окон"""
    return np.stack([encoder.embed(texts) for texts in batch])


def collision_rate(encoder: HashingTextEncoder, texts: Sequence[str]) -> float:
    """
    Доля различных непустых текстов, чей эмбеддинг совпал с эмбеддингом
    другого текста.
    """
    distinct = [t for t in dict.fromkeys(texts) if t]
    if not distinct:
        return 0.0
    rows = encoder.embed(distinct)
    owners: Dict[bytes, List[str]] = {}
    for text, row in zip(distinct, rows):
        owners.setdefault(np.round(row, 12).tobytes(), []).append(text)
    collided = sum(len(group) for group in owners.values() if len(group) > 1)
    rate = collided / len(distinct)
    if collided:
        logger.warning(f"⚠️ {collided} of {len(distinct)} event texts share an embedding")
    return rate


def build_text_encoder(d_text: int, embeddings_path: Path | None = None) -> TextEncoder:
    if embeddings_path is None:
        return HashingTextEncoder(d_text)
    encoder = ExternalEmbeddingEncoder(load_external_embeddings(embeddings_path, d_text))
    logger.info(f"🔹 Using external text embeddings from {embeddings_path}")
    return encoder
