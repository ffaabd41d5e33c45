"""
Бинарный чекпоинт модели.

Формат (little-endian):
    b"FUSE" | version u32 | header_len u32 | header JSON (utf-8)
    | тензоры f64 в порядке header["params"] | CRC32 u32 всего предыдущего

Порядок проверок при чтении: magic, версия, контрольная сумма.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from loguru import logger

from fuse_traffic.core.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from fuse_traffic.core.errors import CheckpointError, CheckpointVersionError, ChecksumError
from fuse_traffic.data.series import NormStats
from fuse_traffic.models.fuse_model import FuseTrafficModel
from fuse_traffic.schemas.config import ModelConfig

_U32 = struct.Struct("<I")
_PREFIX = len(CHECKPOINT_MAGIC) + 2 * _U32.size


@dataclass
class Checkpoint:
    config: ModelConfig
    seed: int
    tensors: Dict[str, np.ndarray]
    stats: NormStats
    rng_state: Dict[str, Any] = field(default_factory=dict)
    epoch: int = 0
    best_val_mae: Optional[float] = None
    format_version: int = CHECKPOINT_VERSION


def from_model(
    model: FuseTrafficModel,
    stats: NormStats,
    epoch: int = 0,
    best_val_mae: Optional[float] = None,
) -> Checkpoint:
    return Checkpoint(
        config=model.config,
        seed=model.seed,
        tensors={p.name: p.data.copy() for p in model.parameters()},
        stats=stats,
        rng_state=model.dropout_rng.bit_generator.state,
        epoch=epoch,
        best_val_mae=(
            best_val_mae if best_val_mae is not None and math.isfinite(best_val_mae) else None
        ),
    )


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    names = list(ckpt.tensors)
    header = {
        "format_version": ckpt.format_version,
        "config": ckpt.config.model_dump(mode="json"),
        "seed": ckpt.seed,
        "stats": ckpt.stats.to_dict(),
        "rng_state": ckpt.rng_state,
        "epoch": ckpt.epoch,
        "best_val_mae": ckpt.best_val_mae,
        "params": [{"name": n, "shape": list(ckpt.tensors[n].shape)} for n in names],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = bytearray()
    body += CHECKPOINT_MAGIC
    body += _U32.pack(ckpt.format_version)
    body += _U32.pack(len(header_bytes))
    body += header_bytes
    for n in names:
        body += np.ascontiguousarray(ckpt.tensors[n], dtype="<f8").tobytes()
    body += _U32.pack(zlib.crc32(bytes(body)) & 0xFFFFFFFF)
    return bytes(body)


def decode_checkpoint(raw: bytes) -> Checkpoint:
    if len(raw) < len(CHECKPOINT_MAGIC):
        raise ChecksumError("checkpoint is truncated")
    if raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError("not a checkpoint file: bad magic bytes")
    if len(raw) < _PREFIX + _U32.size:
        raise ChecksumError("checkpoint is truncated")
    (version,) = _U32.unpack_from(raw, len(CHECKPOINT_MAGIC))
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"checkpoint format version {version} is not supported (expected {CHECKPOINT_VERSION})"
        )
    (stored_crc,) = _U32.unpack_from(raw, len(raw) - _U32.size)
    if zlib.crc32(raw[: -_U32.size]) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError("checkpoint checksum mismatch (file corrupt or truncated)")

    (header_len,) = _U32.unpack_from(raw, len(CHECKPOINT_MAGIC) + _U32.size)
    header = json.loads(raw[_PREFIX : _PREFIX + header_len].decode("utf-8"))
    offset = _PREFIX + header_len
    tensors: Dict[str, np.ndarray] = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) * 8
        chunk = np.frombuffer(raw[offset : offset + size], dtype="<f8")
        tensors[entry["name"]] = chunk.reshape(shape).astype(np.float64)
        offset += size
    if offset != len(raw) - _U32.size:
        raise CheckpointError("checkpoint payload length disagrees with its header")

    stats = header["stats"]
    return Checkpoint(
        config=ModelConfig.model_validate(header["config"]),
        seed=int(header["seed"]),
        tensors=tensors,
        stats=NormStats(mean=float(stats["mean"]), std=float(stats["std"])),
        rng_state=header["rng_state"],
        epoch=int(header["epoch"]),
        best_val_mae=header["best_val_mae"],
        format_version=version,
    )


def save_checkpoint(path: Path, ckpt: Checkpoint) -> None:
    path.write_bytes(encode_checkpoint(ckpt))
    logger.info(f"💾 Checkpoint with {len(ckpt.tensors)} tensors saved to {path}")


def load_checkpoint(path: Path) -> Checkpoint:
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())


def restore_model(ckpt: Checkpoint) -> FuseTrafficModel:
    model = FuseTrafficModel(ckpt.config, seed=ckpt.seed)
    params = model.named_parameters()
    if set(params) != set(ckpt.tensors):
        missing = sorted(set(params) ^ set(ckpt.tensors))
        raise CheckpointError(f"checkpoint parameters do not match the model: {missing}")
    for name, p in params.items():
        if p.shape != ckpt.tensors[name].shape:
            raise CheckpointError(
                f"parameter {name} has shape {ckpt.tensors[name].shape}, expected {p.shape}"
            )
        p.value = ckpt.tensors[name].copy()
    if ckpt.rng_state:
        model.dropout_rng.bit_generator.state = ckpt.rng_state
    return model
