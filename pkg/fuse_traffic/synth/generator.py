"""
Детерминированный генератор синтетического трафика с событиями.

Базовый сигнал: синусоида суточного цикла с фазой узла плюс AR(1)-шум.
Событие умножает скорость затронутых узлов на классовый множитель
с линейными рампами начала и восстановления; соседи первого порядка
получают эффект, ослабленный `neighbor_decay`.
"""

from __future__ import annotations

from datetime import timedelta
from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger

from fuse_traffic.core.constants import AR_COEFFICIENT, IMPACT_MULTIPLIERS, RAMP_INTERVALS
from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.data.series import TrafficSeries
from fuse_traffic.graph.network import RoadNetwork
from fuse_traffic.nn.rng import RngState
from fuse_traffic.nn.tensor import Matrix
from fuse_traffic.schemas.config import GeneratorConfig
from fuse_traffic.schemas.events import EventCategory, EventRecord, Impact, SynthEvent
from fuse_traffic.synth.templates import render_event_text

CATEGORIES: Tuple[EventCategory, ...] = ("accident", "concert", "weather", "crime")


def event_profile(start: int, duration: int, n_steps: int) -> Matrix:
    """
    Профиль интенсивности события p(t) in [0, 1] длины n_steps.

    Нарастание за RAMP_INTERVALS шагов от `start`, плато до конца события,
    затем линейное восстановление за RAMP_INTERVALS шагов.
    """
    t = np.arange(n_steps)
    end = start + duration
    onset = np.clip((t - start + 1) / RAMP_INTERVALS, 0.0, 1.0)
    recovery = np.clip((end + RAMP_INTERVALS - 1 - t) / RAMP_INTERVALS, 0.0, 1.0)
    return np.minimum(onset, recovery)


def plateau_range(event: SynthEvent) -> range:
    """Шаги, на которых профиль события равен 1"""
    return range(event.start + RAMP_INTERVALS - 1, event.start + event.duration)


def _validate_events(events: Sequence[SynthEvent], n_steps: int, n_sensors: int) -> None:
    for e in events:
        if e.start + e.duration > n_steps:
            raise DataValidationError(
                f"event at start={e.start} with duration={e.duration} exceeds n_steps={n_steps}"
            )
        bad = [v for v in e.nodes if not 0 <= v < n_sensors]
        if bad:
            raise DataValidationError(f"event nodes {bad} outside [0, {n_sensors})")


def baseline_speeds(config: GeneratorConfig) -> Matrix:
    """Бессобытийный контрфактический ряд N×T (без клиппинга)"""
    state = RngState(config.seed)
    n, steps = config.n_sensors, config.n_steps
    steps_per_day = 24 * 60 / config.interval_minutes

    phase = state.stream("phase").uniform(0.0, 2.0 * np.pi, size=n)
    t = np.arange(steps)
    signal = config.base_speed - config.daily_amplitude * np.sin(
        2.0 * np.pi * t[None, :] / steps_per_day + phase[:, None]
    )

    eps = state.stream("noise").standard_normal(size=(n, steps))
    noise = np.zeros((n, steps))
    if config.noise_std > 0.0:
        noise[:, 0] = config.noise_std * eps[:, 0]
        for k in range(1, steps):
            noise[:, k] = AR_COEFFICIENT * noise[:, k - 1] + config.noise_std * eps[:, k]
    return signal + noise


def impact_factors(
    events: Sequence[SynthEvent], network: RoadNetwork, n_steps: int, neighbor_decay: float
) -> Matrix:
    """Мультипликативные множители скорости N×T; вне зоны событий ровно 1.0"""
    factors = np.ones((network.n, n_steps))
    for e in events:
        magnitude = 1.0 - IMPACT_MULTIPLIERS[e.impact.value]
        if magnitude == 0.0:
            continue
        profile = event_profile(e.start, e.duration, n_steps)
        weights = np.zeros(network.n)
        for v in e.nodes:
            for u in network.neighbors(v):
                weights[u] = max(weights[u], neighbor_decay)
        weights[list(e.nodes)] = 1.0
        for node in np.flatnonzero(weights):
            factors[node] *= 1.0 - magnitude * weights[node] * profile
    return factors


def event_records(
    events: Sequence[SynthEvent], config: GeneratorConfig
) -> List[EventRecord]:
    """Записи с истинными метками: по одной на (событие, узел события)"""
    step = timedelta(minutes=config.interval_minutes)
    records = []
    for e in events:
        start = config.start_time + step * e.start
        end = config.start_time + step * (e.start + e.duration - 1)
        for node in sorted(e.nodes):
            if e.impact == Impact.none:
                text = ""
            else:
                text = e.text or render_event_text(e.category, e.impact.value, node)
            records.append(
                EventRecord(
                    node_id=node,
                    window_start=start,
                    window_end=end,
                    impact=e.impact,
                    text=text,
                    category=e.category,
                )
            )
    return records


def generate(
    config: GeneratorConfig, events: Sequence[SynthEvent], network: RoadNetwork
) -> Tuple[TrafficSeries, List[EventRecord]]:
    if network.n != config.n_sensors:
        raise DataValidationError(
            f"network has {network.n} nodes, generator expects {config.n_sensors}"
        )
    _validate_events(events, config.n_steps, config.n_sensors)

    speeds = baseline_speeds(config)
    speeds = speeds * impact_factors(events, network, config.n_steps, config.neighbor_decay)
    speeds = np.maximum(speeds, 0.0)

    series = TrafficSeries(
        values=speeds,
        interval_minutes=config.interval_minutes,
        start_time=config.start_time,
        kind="speed",
    )
    records = event_records(events, config)
    logger.info(
        f"🚦 Generated series {config.n_sensors}x{config.n_steps} with {len(events)} events"
    )
    return series, records


def _spread(network: RoadNetwork, nodes: List[int], extra: int) -> List[int]:
    """Обход в ширину от узлов события: ещё `extra` ближайших по числу хопов узлов"""
    covered = list(nodes)
    frontier = list(nodes)
    while extra > 0 and frontier:
        step = []
        for v in frontier:
            for u in network.neighbors(v):
                if u not in covered and extra > 0:
                    covered.append(u)
                    step.append(u)
                    extra -= 1
        frontier = step
    return covered


def script_events(
    network: RoadNetwork,
    n_steps: int,
    count: int,
    min_duration: int,
    max_duration: int,
    rng: RngState,
    spread: int = 0,
) -> List[SynthEvent]:
    """
    Случайный сценарий событий; классы влияния чередуются по кругу,
    так что при count >= 4 представлены все четыре класса.

    `spread` расширяет каждое событие на соседние участки (площадные события:
    погода, массовые мероприятия).
    """
    gen = rng.stream("script")
    impacts = Impact.ordered()
    events = []
    for k in range(count):
        duration = int(gen.integers(min_duration, max_duration + 1))
        if duration > n_steps:
            raise DataValidationError(f"event duration {duration} exceeds n_steps={n_steps}")
        start = int(gen.integers(0, n_steps - duration + 1))
        node = int(gen.integers(0, network.n))
        nodes = [node]
        neighbors = network.neighbors(node)
        if neighbors and gen.random() < 0.3:
            nodes.append(int(neighbors[int(gen.integers(0, len(neighbors)))]))
        if spread:
            nodes = _spread(network, nodes, spread)
        category = CATEGORIES[int(gen.integers(0, len(CATEGORIES)))]
        events.append(
            SynthEvent(
                nodes=sorted(nodes),
                start=start,
                duration=duration,
                impact=impacts[k % len(impacts)],
                category=category,
            )
        )
    events.sort(key=lambda e: (e.start, e.nodes))
    return events
