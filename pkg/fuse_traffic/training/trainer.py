"""Цикл обучения: перемешивание с сидом, минибатчи, Adam, ранняя остановка"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from loguru import logger

from fuse_traffic.core.errors import DataValidationError, DivergenceError
from fuse_traffic.data.series import NormStats, denormalize
from fuse_traffic.data.windows import WindowSample, stack_samples
from fuse_traffic.models.fuse_model import FuseTrafficModel
from fuse_traffic.nn.rng import RngState
from fuse_traffic.nn.tensor import Matrix
from fuse_traffic.schemas.config import TrainConfig
from fuse_traffic.training.loss import masked_mae
from fuse_traffic.training.optimizer import Adam

# t_anchor → эмбеддинги текста событий (N, d_text)
TextBank = Mapping[int, Matrix]


@dataclass
class EpochRecord:
    epoch: int
    train_mae: float
    val_mae: float
    seconds: float


@dataclass
class TrainResult:
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_mae: float = math.inf
    stopped_early: bool = False


class EarlyStopping:
    """Остановка, когда метрика не улучшалась `patience` эпох подряд"""

    def __init__(self, patience: int):
        if patience < 1:
            raise ValueError("patience must be >= 1")
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, value: float) -> bool:
        if value < self.best:
            self.best = value
            self.best_epoch = epoch
            self.bad_epochs = 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


def batch_texts(samples: Sequence[WindowSample], bank: TextBank) -> Matrix:
    try:
        return np.stack([bank[s.t_anchor] for s in samples])
    except KeyError as e:
        raise DataValidationError(f"no event embeddings for anchor {e.args[0]}") from e


def predict_samples(
    model: FuseTrafficModel,
    samples: Sequence[WindowSample],
    a_hat: Matrix,
    bank: TextBank,
    stats: NormStats,
    batch_size: int = 64,
) -> Matrix:
    """Денормализованные прогнозы (B, N, H_out) в порядке примеров"""
    out = []
    for lo in range(0, len(samples), batch_size):
        chunk = samples[lo : lo + batch_size]
        x = np.stack([s.x for s in chunk])
        out.append(denormalize(model.predict(x, a_hat, batch_texts(chunk, bank)), stats))
    return np.concatenate(out, axis=0)


def evaluate_mae(
    model: FuseTrafficModel,
    samples: Sequence[WindowSample],
    a_hat: Matrix,
    bank: TextBank,
    stats: NormStats,
) -> float:
    _, y, mask = stack_samples(samples)
    pred = predict_samples(model, samples, a_hat, bank, stats)
    count = int(mask.sum())
    if count == 0:
        return math.nan
    return float(np.abs(pred - y)[mask].sum() / count)


class Trainer:
    def __init__(
        self,
        model: FuseTrafficModel,
        a_hat: Matrix,
        bank: TextBank,
        stats: NormStats,
        config: TrainConfig,
    ):
        self.model = model
        self.a_hat = a_hat
        self.bank = bank
        self.stats = stats
        self.config = config
        self.optimizer = Adam(model.parameters(), lr=config.lr)
        self._shuffle = RngState(config.seed).stream("shuffle")

    def _snapshot(self) -> Dict[str, np.ndarray]:
        return {p.name: p.data.copy() for p in self.model.parameters()}

    def _restore(self, snapshot: Dict[str, np.ndarray]) -> None:
        for p in self.model.parameters():
            p.value = snapshot[p.name].copy()

    def train_epoch(self, epoch: int, samples: Sequence[WindowSample]) -> float:
        order = self._shuffle.permutation(len(samples))
        total_abs = 0.0
        total_count = 0
        bs = self.config.batch_size
        for batch_idx, lo in enumerate(range(0, len(order), bs)):
            batch = [samples[i] for i in order[lo : lo + bs]]
            x, y, mask = stack_samples(batch)
            count = int(mask.sum())
            if count == 0:
                continue
            self.optimizer.zero_grad()
            pred = self.model.forward(x, self.a_hat, batch_texts(batch, self.bank), training=True)
            loss = masked_mae(pred, y, mask, self.stats)
            value = loss.item()
            if not math.isfinite(value):
                raise DivergenceError(
                    f"loss became {value} at epoch {epoch}, batch {batch_idx}, lr {self.config.lr}"
                )
            loss.backward()
            self.optimizer.step()
            total_abs += value * count
            total_count += count
        return total_abs / total_count if total_count else math.nan

    def fit(
        self, train: Sequence[WindowSample], val: Sequence[WindowSample]
    ) -> TrainResult:
        if not train or not val:
            raise DataValidationError(
                f"training needs nonempty splits, got train={len(train)}, val={len(val)}"
            )
        logger.info(
            f"🔹 Training {self.model.variant} on {len(train)} samples "
            f"(val {len(val)}, lr {self.config.lr}, batch {self.config.batch_size})"
        )
        stopper = EarlyStopping(self.config.patience)
        result = TrainResult()
        best: Optional[Dict[str, np.ndarray]] = None

        for epoch in range(1, self.config.max_epochs + 1):
            started = time.perf_counter()
            train_mae = self.train_epoch(epoch, train)
            val_mae = evaluate_mae(self.model, val, self.a_hat, self.bank, self.stats)
            seconds = time.perf_counter() - started
            result.history.append(EpochRecord(epoch, train_mae, val_mae, seconds))
            logger.debug(f"epoch {epoch}: train_mae={train_mae:.4f} val_mae={val_mae:.4f} ({seconds:.2f}s)")

            if stopper.update(epoch, val_mae):
                best = self._snapshot()
            if stopper.should_stop:
                result.stopped_early = True
                logger.info(f"🚦 Early stop at epoch {epoch}, best epoch {stopper.best_epoch}")
                break

        if best is not None:
            self._restore(best)
        result.best_epoch = stopper.best_epoch
        result.best_val_mae = stopper.best
        logger.info(
            f"✅ Training finished: best val MAE {stopper.best:.4f} at epoch {stopper.best_epoch}"
        )
        return result


def train(
    model: FuseTrafficModel,
    train_samples: Sequence[WindowSample],
    val_samples: Sequence[WindowSample],
    bank: TextBank,
    a_hat: Matrix,
    stats: NormStats,
    config: TrainConfig,
) -> TrainResult:
    return Trainer(model, a_hat, bank, stats, config).fit(train_samples, val_samples)
