import numpy as np
import numpy.testing as npt
import pytest

from fuse_traffic.core.errors import ConfigurationError
from fuse_traffic.data.windows import WindowSample
from fuse_traffic.models import FuseTrafficModel, forward
from fuse_traffic.textenc import HashingTextEncoder


def _a_hat(n: int) -> np.ndarray:
    return np.full((n, n), 1.0 / n)


def _sample(rng, n: int, h_in: int, h_out: int) -> WindowSample:
    return WindowSample(
        x=rng.normal(size=(n, h_in)),
        y=rng.uniform(10, 70, size=(n, h_out)),
        t_anchor=h_in - 1,
    )


def test_output_shape(toy_model_config, rng):
    model = FuseTrafficModel(toy_model_config, seed=0)
    text = rng.normal(size=(4, 16))
    assert model.predict(rng.normal(size=(4, 6)), _a_hat(4), text).shape == (4, 3)
    batched = model.predict(rng.normal(size=(5, 4, 6)), _a_hat(4), rng.normal(size=(5, 4, 16)))
    assert batched.shape == (5, 4, 3)


def test_disabled_events_equal_empty_texts(toy_model_config, rng):
    encoder = HashingTextEncoder(16)
    sample = _sample(rng, 4, 6, 3)
    enabled = FuseTrafficModel(toy_model_config, seed=0)
    disabled = FuseTrafficModel(toy_model_config.with_variant("event_disabled"), seed=0)
    texts = ["Parade on Main St", "", "Severe storm flooding", "Crash"]
    blank = forward(enabled, sample, [""] * 4, _a_hat(4), encoder)
    npt.assert_array_equal(forward(disabled, sample, texts, _a_hat(4), encoder), blank)
    assert not np.array_equal(forward(enabled, sample, texts, _a_hat(4), encoder), blank)


def test_add_variant_composes_modules(toy_model_config, rng):
    model = FuseTrafficModel(toy_model_config.with_variant("add"), seed=1)
    trace = model.trace(rng.normal(size=(4, 6)), _a_hat(4), rng.normal(size=(4, 16)))
    npt.assert_array_equal(trace.h_fused.data, trace.e_st.data + trace.e_text.data)
    expected = trace.h_fused.data @ model.decoder.w.data + model.decoder.b.data
    npt.assert_allclose(trace.y_hat.data, expected, atol=1e-12)


def test_same_seed_same_parameters(toy_model_config):
    a = FuseTrafficModel(toy_model_config, seed=5).named_parameters()
    b = FuseTrafficModel(toy_model_config, seed=5).named_parameters()
    c = FuseTrafficModel(toy_model_config, seed=6).named_parameters()
    assert all(np.array_equal(a[k].data, b[k].data) for k in a)
    assert not np.array_equal(a["fusion.wq"].data, c["fusion.wq"].data)


def test_parameters_are_named_uniquely_and_text_encoder_is_frozen(toy_model_config):
    model = FuseTrafficModel(toy_model_config, seed=0)
    names = [p.name for p in model.parameters()]
    assert len(names) == len(set(names))
    groups = model.parameter_groups()
    assert set(groups) == {"st_encoder", "projection", "fusion.cross_attention", "decoder"}
    # замороженный энкодер текста параметров не имеет
    assert [p.name for p in groups["projection"]] == ["text_proj.w", "text_proj.b"]
    assert all(p.trainable for p in model.parameters())


def test_wrong_window_length_rejected(toy_model_config, rng):
    model = FuseTrafficModel(toy_model_config, seed=0)
    with pytest.raises(ConfigurationError, match="H_in=6"):
        model.predict(rng.normal(size=(4, 5)), _a_hat(4), rng.normal(size=(4, 16)))


def test_wrong_text_shape_rejected(toy_model_config, rng):
    model = FuseTrafficModel(toy_model_config, seed=0)
    with pytest.raises(ConfigurationError):
        model.predict(rng.normal(size=(4, 6)), _a_hat(4), rng.normal(size=(4, 8)))


def test_event_count_must_match_sensors(toy_model_config, rng):
    model = FuseTrafficModel(toy_model_config, seed=0)
    with pytest.raises(ConfigurationError):
        forward(model, _sample(rng, 4, 6, 3), ["", ""], _a_hat(4), HashingTextEncoder(16))


@pytest.mark.parametrize("variant", ["cross_attention", "gating", "add", "concat", "event_disabled"])
def test_every_variant_reports_its_name(variant, toy_model_config):
    assert FuseTrafficModel(toy_model_config.with_variant(variant)).variant == variant
