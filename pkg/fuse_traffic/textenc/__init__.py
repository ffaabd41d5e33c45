from .embedder import (
    ExternalEmbeddingEncoder,
    HashingTextEncoder,
    TextEmbedding,
    TextEncoder,
    build_text_encoder,
    collision_rate,
    embed,
    embed_batch,
    tokenize,
)
from .projection import Projection, project

__all__ = [
    "ExternalEmbeddingEncoder",
    "HashingTextEncoder",
    "Projection",
    "TextEmbedding",
    "TextEncoder",
    "build_text_encoder",
    "collision_rate",
    "embed",
    "embed_batch",
    "project",
    "tokenize",
]
