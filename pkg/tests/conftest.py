from datetime import datetime
from pathlib import Path

import numpy as np
import pytest
from loguru import logger

from fuse_traffic.schemas.config import (
    EvalSection,
    FusionConfig,
    GeneratorConfig,
    ModelConfig,
    RunConfig,
    STEncoderConfig,
    SynthSection,
    TrainConfig,
)

CONFIGS_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def toy_model_config() -> ModelConfig:
    """N=4, d=8, h=2, H_in=6, H_out=3"""
    return ModelConfig(
        st=STEncoderConfig(layers=1, hidden=8, temporal_kernel=3),
        fusion=FusionConfig(kind="cross_attention", heads=2, ffn_layers=2, ffn_mult=2),
        d_text=16,
        h_in=6,
        h_out=3,
    )


@pytest.fixture
def toy_config(tmp_path: Path, toy_model_config: ModelConfig) -> RunConfig:
    return RunConfig(
        out_dir=tmp_path / "out",
        synth=SynthSection(
            generator=GeneratorConfig(n_sensors=4, n_steps=288, noise_std=0.5),
            random_events=6,
            min_duration=4,
            max_duration=12,
        ),
        model=toy_model_config,
        train=TrainConfig(lr=0.005, batch_size=16, max_epochs=2, patience=2),
        eval=EvalSection(horizons=[1, 2, 3]),
    )


@pytest.fixture
def la_time() -> datetime:
    return datetime(2012, 3, 2, 17, 40)


@pytest.fixture
def caplog_loguru():
    """Сообщения loguru уровня WARNING и выше"""
    messages: list[str] = []
    handler_id = logger.add(lambda m: messages.append(m.record["message"]), level="WARNING")
    yield messages
    logger.remove(handler_id)
