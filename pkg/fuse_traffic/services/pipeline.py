"""
Сквозной конвейер: датасет → окна → тексты событий → обучение → оценка.

Каждая команда CLI является тонкой обёрткой над функциями этого модуля.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.core.utils import ensure_dir
from fuse_traffic.data import io as dataset_io
from fuse_traffic.data.series import NormStats, TrafficSeries, fit_normalizer
from fuse_traffic.data.windows import (
    DatasetSplit,
    WindowSample,
    chronological_split,
    make_windows,
    normalize_windows,
    stack_samples,
)
from fuse_traffic.graph.network import (
    RoadNetwork,
    build_adjacency_gaussian,
    build_network_from_sensors,
    grid_sensors,
    normalize_adjacency,
)
from fuse_traffic.metrics.evaluation import (
    MetricReport,
    StratumReport,
    assign_strata,
    per_horizon,
    stratify,
)
from fuse_traffic.models.fuse_model import FuseTrafficModel
from fuse_traffic.nn.rng import RngState
from fuse_traffic.nn.tensor import Matrix
from fuse_traffic.schemas.config import RunConfig, VariantName
from fuse_traffic.schemas.events import EventRecord, RetrievalStats, Sensor, SynthEvent, TemplateId
from fuse_traffic.services.event_query import EventCache
from fuse_traffic.services.providers.base import EventProvider
from fuse_traffic.services.providers.registry import ProviderRegistry
from fuse_traffic.services.retrieval import (
    EventSource,
    QueryContext,
    RetrievalLimits,
    build_fixture,
)
from fuse_traffic.synth.generator import generate, script_events
from fuse_traffic.textenc.embedder import TextEncoder, build_text_encoder
from fuse_traffic.training.trainer import TextBank, TrainResult, predict_samples, train


@dataclass
class DatasetBundle:
    """Ряд, сенсоры, граф и (для синтетики) истинные записи событий"""

    series: TrafficSeries
    sensors: List[Sensor]
    network: RoadNetwork
    records: List[EventRecord] = field(default_factory=list)
    events: List[SynthEvent] = field(default_factory=list)


@dataclass
class PreparedData:
    bundle: DatasetBundle
    split: DatasetSplit
    stats: NormStats
    a_hat: Matrix

    @property
    def all_samples(self) -> List[WindowSample]:
        return [*self.split.train, *self.split.val, *self.split.test]

    @property
    def anchors(self) -> List[int]:
        return [s.t_anchor for s in self.all_samples]


@dataclass
class EvalOutput:
    overall: List[MetricReport]
    strata: List[StratumReport]
    y: Matrix
    pred: Matrix
    strata_ranks: np.ndarray


# --- датасет ---------------------------------------------------------------


def synthesize(config: RunConfig) -> DatasetBundle:
    """Синтетический датасет в памяти (сценарий из файла или случайный)"""
    synth = config.synth
    gen = synth.generator
    sensors = grid_sensors(gen.n_sensors, synth.origin_lat, synth.origin_lon, synth.spacing_km)
    network = build_network_from_sensors(sensors, config.graph.sigma_km, config.graph.threshold)
    if synth.events_path is not None:
        events = dataset_io.load_event_script(synth.events_path)
    else:
        events = script_events(
            network,
            gen.n_steps,
            synth.random_events,
            synth.min_duration,
            synth.max_duration,
            RngState(gen.seed),
            spread=synth.event_spread,
        )
    series, records = generate(gen, events, network)
    return DatasetBundle(series=series, sensors=sensors, network=network, records=records, events=events)


def save_dataset(bundle: DatasetBundle, directory: Path) -> List[Path]:
    ensure_dir(directory)
    paths = list(dataset_io.save_series(bundle.series, directory))
    sensors_path = directory / dataset_io.SENSORS_CSV
    dataset_io.save_sensors(bundle.sensors, sensors_path)
    events_path = directory / dataset_io.EVENTS_JSON
    dataset_io.save_event_records(bundle.records, events_path)
    script_path = directory / dataset_io.EVENT_SCRIPT_JSON
    dataset_io.save_event_script(bundle.events, script_path)
    logger.info(f"📦 Dataset written to {directory}")
    return [*paths, sensors_path, events_path, script_path]


def load_dataset(config: RunConfig) -> DatasetBundle:
    directory = config.data.dataset_dir
    series = dataset_io.load_series(directory)
    sensors = dataset_io.load_sensors(config.graph.sensors_path or directory / dataset_io.SENSORS_CSV)
    if len(sensors) != series.n:
        raise DataValidationError(f"{len(sensors)} sensors for a series of {series.n} nodes")
    if config.graph.distances_path is not None:
        distances = dataset_io.load_distances(config.graph.distances_path, series.n)
        network = build_adjacency_gaussian(
            distances, config.graph.sigma_km, config.graph.threshold, sensors
        )
    else:
        network = build_network_from_sensors(sensors, config.graph.sigma_km, config.graph.threshold)
    events_path = directory / dataset_io.EVENTS_JSON
    records = dataset_io.load_event_records(events_path) if events_path.exists() else []
    if not records:
        logger.warning(f"⚠️ No ground-truth event labels in {directory}, strata collapse to none")
    return DatasetBundle(series=series, sensors=sensors, network=network, records=records)


def prepare(
    bundle: DatasetBundle, config: RunConfig, stats: Optional[NormStats] = None
) -> PreparedData:
    """
    Окна, хронологическое разбиение и нормализация по обучающей части.

    `stats` из чекпоинта заменяет статистики, посчитанные заново.
    """
    model = config.model
    windows = make_windows(bundle.series, model.h_in, model.h_out, config.data.stride)
    split = chronological_split(windows, config.data.split)
    if not split.train:
        raise DataValidationError("training split is empty")
    train_end = max(s.target_end for s in split.train) + 1
    if stats is None:
        stats = fit_normalizer(bundle.series, range(0, train_end))
    split = DatasetSplit(
        train=normalize_windows(split.train, stats),
        val=normalize_windows(split.val, stats),
        test=normalize_windows(split.test, stats),
        dropped=split.dropped,
    )
    return PreparedData(
        bundle=bundle, split=split, stats=stats, a_hat=normalize_adjacency(bundle.network)
    )


# --- события ---------------------------------------------------------------


def query_context(config: RunConfig, series: TrafficSeries) -> QueryContext:
    return QueryContext(config.model.h_in, config.model.h_out, series.interval_minutes)


def event_source(
    config: RunConfig, bundle: DatasetBundle, template_id: Optional[TemplateId] = None
) -> EventSource:
    series = bundle.series
    return EventSource(
        sensors=bundle.sensors,
        series_start=series.start_time,
        interval_minutes=series.interval_minutes,
        template_id=template_id or config.events.template,
        context=query_context(config, series),
        grid_minutes=config.events.grid_minutes,
    )


def resolve_provider(
    config: RunConfig,
    bundle: DatasetBundle,
    source: EventSource,
    anchors: Sequence[int],
    registry: ProviderRegistry,
) -> EventProvider:
    """
    Провайдер по конфигурации. Mock без файла фикстуры отвечает истинными
    текстами синтетики.
    """
    fixture = None
    if config.events.provider == "mock" and config.events.fixture_path is None:
        fixture = build_fixture(
            bundle.records,
            bundle.sensors,
            [source.anchor_time(a) for a in anchors],
            source.template_id,
            source.context,
            source.grid_minutes,
        )
    return registry.get(config.events, fixture)


async def _collect_texts(
    config: RunConfig,
    bundle: DatasetBundle,
    anchors: Sequence[int],
    template_id: Optional[TemplateId],
    cache: EventCache,
    stats: RetrievalStats,
) -> Dict[int, List[str]]:
    source = event_source(config, bundle, template_id)
    registry = ProviderRegistry()
    try:
        provider = resolve_provider(config, bundle, source, anchors, registry)
        return await source.collect(
            anchors, provider, cache, RetrievalLimits.from_config(config.events), stats
        )
    finally:
        await registry.aclose()


def collect_event_texts(
    config: RunConfig,
    bundle: DatasetBundle,
    anchors: Sequence[int],
    template_id: Optional[TemplateId] = None,
    cache: Optional[EventCache] = None,
    stats: Optional[RetrievalStats] = None,
) -> Dict[int, List[str]]:
    """Тексты событий по якорю: список из N строк (пустая строка: событий нет)"""
    cache = cache if cache is not None else open_cache(config)
    stats = stats if stats is not None else RetrievalStats()
    texts = asyncio.run(_collect_texts(config, bundle, anchors, template_id, cache, stats))
    if config.events.cache_path is not None:
        cache.save(config.events.cache_path)
    return texts


def open_cache(config: RunConfig) -> EventCache:
    path = config.events.cache_path
    if path is not None and path.exists():
        return EventCache.load(path)
    return EventCache()


def text_bank(texts: Dict[int, List[str]], encoder: TextEncoder) -> TextBank:
    return {anchor: encoder.embed(row) for anchor, row in texts.items()}


def build_bank(
    config: RunConfig,
    prepared: PreparedData,
    template_id: Optional[TemplateId] = None,
    d_text: Optional[int] = None,
) -> Tuple[TextBank, Dict[int, List[str]]]:
    texts = collect_event_texts(config, prepared.bundle, prepared.anchors, template_id)
    encoder = build_text_encoder(d_text or config.model.d_text, config.text.embeddings_path)
    return text_bank(texts, encoder), texts


# --- обучение и оценка -----------------------------------------------------


def train_variant(
    config: RunConfig,
    prepared: PreparedData,
    bank: TextBank,
    variant: Optional[VariantName] = None,
) -> Tuple[FuseTrafficModel, TrainResult]:
    model_config = config.model if variant is None else config.model.with_variant(variant)
    model = FuseTrafficModel(model_config, seed=config.seed)
    result = train(
        model,
        prepared.split.train,
        prepared.split.val,
        bank,
        prepared.a_hat,
        prepared.stats,
        config.train,
    )
    return model, result


def evaluate_model(
    model: FuseTrafficModel,
    config: RunConfig,
    prepared: PreparedData,
    bank: TextBank,
    samples: Optional[Sequence[WindowSample]] = None,
) -> EvalOutput:
    samples = list(prepared.split.test if samples is None else samples)
    if not samples:
        raise DataValidationError("evaluation split is empty")
    _, y, mask = stack_samples(samples)
    pred = predict_samples(
        model, samples, prepared.a_hat, bank, prepared.stats, batch_size=config.train.batch_size
    )
    horizons = config.eval.horizons
    overall = per_horizon(y, pred, mask, horizons, config.eval.mape_threshold)
    ranks = assign_strata(
        samples,
        prepared.bundle.records,
        prepared.bundle.series.timestamp,
        per_node=config.eval.strata_level == "node",
    )
    strata = stratify(y, pred, ranks, mask, horizons, config.eval.mape_threshold)
    return EvalOutput(overall=overall, strata=strata, y=y, pred=pred, strata_ranks=ranks)


def sample_times(prepared: PreparedData, samples: Sequence[WindowSample]) -> List[datetime]:
    return [prepared.bundle.series.timestamp(s.t_anchor) for s in samples]
