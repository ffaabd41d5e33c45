from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fuse_traffic.core.constants import (
    DEFAULT_ADJ_THRESHOLD,
    DEFAULT_D_MODEL,
    DEFAULT_D_TEXT,
    DEFAULT_H_IN,
    DEFAULT_H_OUT,
    DEFAULT_HORIZONS,
    DEFAULT_INTERVAL_MINUTES,
    DEFAULT_LR,
    DEFAULT_MAX_CONCURRENCY,
    DEFAULT_PATIENCE,
    DEFAULT_RATE_PER_SECOND,
    DEFAULT_TIMEOUT_MS,
    MAPE_MIN_ABS_TARGET,
    MAX_RETRY_ATTEMPTS,
    RETRY_DELAY_SECONDS,
)
from fuse_traffic.schemas.events import TemplateId

FusionKind = Literal["cross_attention", "gating", "add", "concat"]
EventMode = Literal["enabled", "disabled"]
VariantName = Literal["cross_attention", "gating", "add", "concat", "event_disabled"]
ProviderSlug = Literal["mock", "live", "chat"]
SeriesKind = Literal["speed", "flow"]

ALL_VARIANTS: List[VariantName] = ["cross_attention", "gating", "add", "concat", "event_disabled"]
ALL_TEMPLATES: List[TemplateId] = ["P1", "P2", "P3", "P4", "P5"]


class StrictModel(BaseModel):
    """Секция конфигурации: неизвестные ключи запрещены"""

    model_config = ConfigDict(extra="forbid")


class GraphSection(StrictModel):
    sensors_path: Optional[Path] = None
    distances_path: Optional[Path] = None
    sigma_km: Optional[float] = Field(None, gt=0)
    threshold: float = Field(DEFAULT_ADJ_THRESHOLD, ge=0.0, lt=1.0)


class SplitSpec(StrictModel):
    """Доли хронологического разбиения"""

    train_frac: float = 0.7
    val_frac: float = 0.1
    test_frac: float = 0.2

    @model_validator(mode="after")
    def _check_fractions(self) -> "SplitSpec":
        fractions = (self.train_frac, self.val_frac, self.test_frac)
        if any(not 0.0 < f < 1.0 for f in fractions):
            raise ValueError(f"split fractions must lie in (0, 1), got {fractions}")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fractions)}")
        return self


class DataSection(StrictModel):
    dataset_dir: Path = Path("runs/synth")
    stride: int = Field(1, ge=1)
    split: SplitSpec = Field(default_factory=SplitSpec)


class GeneratorConfig(StrictModel):
    """Параметры синтетического генератора трафика"""

    n_sensors: int = Field(20, ge=1)
    n_steps: int = Field(2880, ge=1)
    interval_minutes: int = Field(DEFAULT_INTERVAL_MINUTES, ge=1)
    base_speed: float = 65.0
    daily_amplitude: float = Field(15.0, ge=0.0)
    noise_std: float = Field(1.0, ge=0.0)
    neighbor_decay: float = Field(0.5, ge=0.0, le=1.0)
    seed: int = 0
    start_time: datetime = datetime(2012, 3, 1, 0, 0)

    @model_validator(mode="after")
    def _check_amplitude(self) -> "GeneratorConfig":
        if self.base_speed <= self.daily_amplitude:
            raise ValueError("base_speed must exceed daily_amplitude")
        return self


class SynthSection(StrictModel):
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    events_path: Optional[Path] = None
    # сценарий генерируется автоматически, если events_path не задан
    random_events: int = Field(60, ge=0)
    min_duration: int = Field(6, ge=1)
    max_duration: int = Field(36, ge=1)
    # число соседних участков, добавляемых к каждому случайному событию
    event_spread: int = Field(0, ge=0)
    origin_lat: float = Field(34.0522, ge=-90.0, le=90.0)
    origin_lon: float = Field(-118.2437, ge=-180.0, le=180.0)
    spacing_km: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _check_durations(self) -> "SynthSection":
        if self.min_duration > self.max_duration:
            raise ValueError("min_duration must not exceed max_duration")
        return self


class EventsSection(StrictModel):
    provider: ProviderSlug = "mock"
    template: TemplateId = "P1"
    fixture_path: Optional[Path] = None
    cache_path: Optional[Path] = None
    # шаг сетки времени QueryKey; None → интервал ряда
    grid_minutes: Optional[int] = Field(None, ge=1)
    endpoint: Optional[str] = None
    chat_model: str = "gemini-1.5-flash"
    chat_base_url: Optional[str] = None
    timeout_ms: int = Field(DEFAULT_TIMEOUT_MS, ge=1)
    max_retries: int = Field(MAX_RETRY_ATTEMPTS, ge=0)
    retry_base_delay_s: float = Field(RETRY_DELAY_SECONDS, ge=0.0)
    max_concurrency: int = Field(DEFAULT_MAX_CONCURRENCY, ge=1)
    rate_per_second: float = Field(DEFAULT_RATE_PER_SECOND, gt=0)


class TextSection(StrictModel):
    embeddings_path: Optional[Path] = None


class STEncoderConfig(StrictModel):
    """Конфигурация эталонного пространственно-временного энкодера"""

    layers: int = Field(2, ge=1)
    hidden: int = Field(DEFAULT_D_MODEL, ge=1)
    temporal_kernel: int = Field(3, ge=1)
    dropout_rate: float = Field(0.0, ge=0.0, lt=1.0)
    pooling: Literal["last", "mean"] = "last"


class FusionConfig(StrictModel):
    kind: FusionKind = "cross_attention"
    heads: int = Field(4, ge=1)
    ffn_layers: int = Field(2, ge=1)
    ffn_mult: int = Field(4, ge=1)
    # начальное значение обучаемого сдвига диагонали логитов внимания (узел к своему тексту);
    # None: сдвига нет
    self_bias: Optional[float] = None


class ModelConfig(StrictModel):
    st: STEncoderConfig = Field(default_factory=STEncoderConfig)
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    d_text: int = Field(DEFAULT_D_TEXT, ge=8)
    h_in: int = Field(DEFAULT_H_IN, ge=1)
    h_out: int = Field(DEFAULT_H_OUT, ge=1)
    event_mode: EventMode = "enabled"

    @property
    def d(self) -> int:
        return self.st.hidden

    @model_validator(mode="after")
    def _check_dims(self) -> "ModelConfig":
        if self.st.hidden % self.fusion.heads:
            raise ValueError(
                f"hidden size {self.st.hidden} is not divisible by {self.fusion.heads} heads"
            )
        if self.h_in < self.st.temporal_kernel:
            raise ValueError(
                f"h_in={self.h_in} is shorter than temporal_kernel={self.st.temporal_kernel}"
            )
        return self

    def with_variant(self, variant: VariantName) -> "ModelConfig":
        """Конфигурация модели для варианта абляции"""
        if variant == "event_disabled":
            return self.model_copy(update={"event_mode": "disabled"})
        fusion = self.fusion.model_copy(update={"kind": variant})
        return self.model_copy(update={"fusion": fusion, "event_mode": "enabled"})

    @property
    def variant(self) -> VariantName:
        if self.event_mode == "disabled":
            return "event_disabled"
        return self.fusion.kind


class TrainConfig(StrictModel):
    lr: float = Field(DEFAULT_LR, gt=0)
    batch_size: int = Field(32, ge=1)
    max_epochs: int = Field(50, ge=1)
    patience: int = Field(DEFAULT_PATIENCE, ge=1)
    seed: int = 0
    loss: Literal["masked_mae"] = "masked_mae"


class EvalSection(StrictModel):
    horizons: List[int] = Field(default_factory=lambda: list(DEFAULT_HORIZONS))
    mape_threshold: float = Field(MAPE_MIN_ABS_TARGET, gt=0)
    case_sensor: Optional[int] = Field(None, ge=0)
    case_steps: int = Field(288, ge=1)
    # "sample": класс окна по всем узлам; "node": класс пары окно × узел
    strata_level: Literal["sample", "node"] = "sample"

    @field_validator("horizons")
    @classmethod
    def _check_horizons(cls, value: List[int]) -> List[int]:
        if not value or any(h < 1 for h in value):
            raise ValueError("horizons must be a nonempty list of positive steps")
        return value


class AblationSection(StrictModel):
    variants: List[VariantName] = Field(default_factory=lambda: list(ALL_VARIANTS))
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2])
    templates: List[TemplateId] = Field(default_factory=lambda: list(ALL_TEMPLATES))
    prompt_sweep: bool = True


class SweepSection(StrictModel):
    ffn_layers: List[int] = Field(default_factory=lambda: [1, 2, 3])
    d_text: List[int] = Field(default_factory=lambda: [64, 128, 256])
    seeds: List[int] = Field(default_factory=lambda: [0])


class RunConfig(StrictModel):
    """Полная конфигурация запуска CLI"""

    seed: int = 0
    out_dir: Path = Path("runs/default")
    graph: GraphSection = Field(default_factory=GraphSection)
    data: DataSection = Field(default_factory=DataSection)
    synth: SynthSection = Field(default_factory=SynthSection)
    events: EventsSection = Field(default_factory=EventsSection)
    text: TextSection = Field(default_factory=TextSection)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalSection = Field(default_factory=EvalSection)
    ablation: AblationSection = Field(default_factory=AblationSection)
    sweep: SweepSection = Field(default_factory=SweepSection)

    @model_validator(mode="after")
    def _check_horizons_fit(self) -> "RunConfig":
        too_far = [h for h in self.eval.horizons if h > self.model.h_out]
        if too_far:
            raise ValueError(f"eval.horizons {too_far} exceed model.h_out={self.model.h_out}")
        return self

    def with_seed(self, seed: int) -> "RunConfig":
        """Один сид на весь запуск: генератор, инициализация и перемешивание"""
        generator = self.synth.generator.model_copy(update={"seed": seed})
        return self.model_copy(
            update={
                "seed": seed,
                "synth": self.synth.model_copy(update={"generator": generator}),
                "train": self.train.model_copy(update={"seed": seed}),
            }
        )

    def with_overrides(
        self,
        seed: Optional[int] = None,
        out_dir: Optional[Path] = None,
        provider: Optional[ProviderSlug] = None,
        variant: Optional[VariantName] = None,
    ) -> "RunConfig":
        config = self
        if seed is not None:
            config = config.with_seed(seed)
        if out_dir is not None:
            config = config.model_copy(update={"out_dir": out_dir})
        if provider is not None:
            events = config.events.model_copy(update={"provider": provider})
            config = config.model_copy(update={"events": events})
        if variant is not None:
            config = config.model_copy(update={"model": config.model.with_variant(variant)})
        return config


def load_run_config(path: Optional[Path]) -> RunConfig:
    """JSON-файл конфигурации; без файла берутся значения по умолчанию"""
    if path is None:
        return RunConfig()
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return RunConfig.model_validate_json(path.read_text(encoding="utf-8"))
