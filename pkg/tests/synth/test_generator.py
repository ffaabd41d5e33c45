import numpy as np
import numpy.testing as npt
import pytest

from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.graph.network import RoadNetwork
from fuse_traffic.nn.rng import RngState
from fuse_traffic.schemas.config import GeneratorConfig
from fuse_traffic.schemas.events import Impact, Sensor, SynthEvent
from fuse_traffic.synth.generator import generate, plateau_range, script_events


def _path_network(n: int = 5) -> RoadNetwork:
    """Цепочка 0-1-2-...: соседи только у смежных индексов"""
    a = np.zeros((n, n))
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = 1.0
    return RoadNetwork.from_adjacency([Sensor(id=i, lat=34.0, lon=-118.0) for i in range(n)], a)


def _config(**overrides) -> GeneratorConfig:
    return GeneratorConfig(n_sensors=5, n_steps=288, seed=3, **overrides)


def _event(impact: Impact, node: int = 0) -> SynthEvent:
    return SynthEvent(nodes=[node], start=100, duration=30, impact=impact)


def test_noiseless_series_is_a_pure_sinusoid():
    config = _config(noise_std=0.0)
    series, records = generate(config, [], _path_network())
    phase = RngState(3).stream("phase").uniform(0.0, 2.0 * np.pi, size=5)
    t = np.arange(288)
    expected = 65.0 - 15.0 * np.sin(2.0 * np.pi * t[None, :] / 288.0 + phase[:, None])
    npt.assert_allclose(series.values, expected, atol=1e-12)
    assert records == []


def test_same_seed_same_output():
    events = [_event(Impact.high, 2)]
    a, ra = generate(_config(), events, _path_network())
    b, rb = generate(_config(), events, _path_network())
    assert a.values.tobytes() == b.values.tobytes()
    assert ra == rb


def test_high_event_plateau_matches_multiplier():
    event = SynthEvent(nodes=[3], start=100, duration=30, impact=Impact.high)
    with_event, _ = generate(_config(), [event], _path_network())
    baseline, _ = generate(_config(), [], _path_network())
    plateau = list(plateau_range(event))
    ratio = with_event.values[3, plateau].mean() / baseline.values[3, plateau].mean()
    assert ratio == pytest.approx(0.4, rel=0.01)


def test_none_event_is_bitwise_noop():
    with_event, records = generate(_config(), [_event(Impact.none)], _path_network())
    baseline, _ = generate(_config(), [], _path_network())
    assert with_event.values.tobytes() == baseline.values.tobytes()
    assert records[0].impact == Impact.none and records[0].text == ""


def test_severity_is_monotone():
    plateau = list(plateau_range(_event(Impact.high)))
    means = []
    for impact in Impact.ordered():
        series, _ = generate(_config(), [_event(impact, 1)], _path_network())
        means.append(series.values[1, plateau].mean())
    assert means[3] < means[2] < means[1] < means[0]


def test_event_is_local_to_one_hop():
    network = _path_network()
    with_event, _ = generate(_config(), [_event(Impact.high, 0)], network)
    baseline, _ = generate(_config(), [], network)
    # узел 1 сосед, узлы 2..4 на расстоянии >= 2
    assert not np.array_equal(with_event.values[1], baseline.values[1])
    assert with_event.values[2:].tobytes() == baseline.values[2:].tobytes()


def test_records_carry_labels_and_texts():
    _, records = generate(_config(), [_event(Impact.moderate, 4)], _path_network())
    (record,) = records
    assert record.node_id == 4
    assert record.impact == Impact.moderate
    assert record.text
    assert record.window_end > record.window_start


def test_out_of_range_event_rejected():
    event = SynthEvent(nodes=[0], start=280, duration=30, impact=Impact.high)
    with pytest.raises(DataValidationError):
        generate(_config(), [event], _path_network())


def test_script_covers_all_classes():
    events = script_events(_path_network(), 288, 8, 6, 12, RngState(0))
    assert {e.impact for e in events} == set(Impact)
    assert all(e.start + e.duration <= 288 for e in events)
    assert events == script_events(_path_network(), 288, 8, 6, 12, RngState(0))


def test_spread_grows_events_over_adjacent_nodes():
    network = _path_network(10)

    def key(e: SynthEvent) -> tuple:
        return (e.start, e.duration, e.impact.rank)

    local = sorted(script_events(network, 288, 8, 6, 12, RngState(0)), key=key)
    wide = sorted(script_events(network, 288, 8, 6, 12, RngState(0), spread=2), key=key)
    assert [(e.start, e.duration, e.impact) for e in wide] == [
        (e.start, e.duration, e.impact) for e in local
    ]
    for narrow, area in zip(local, wide):
        assert set(narrow.nodes) < set(area.nodes)
        assert len(area.nodes) == len(narrow.nodes) + 2
        # на цепочке область остаётся отрезком
        assert area.nodes == list(range(area.nodes[0], area.nodes[-1] + 1))
