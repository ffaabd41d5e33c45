"""Сборка модели: энкодер → проекция текста → слияние → декодер"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from fuse_traffic.core.errors import ConfigurationError
from fuse_traffic.data.windows import WindowSample
from fuse_traffic.models.decoder import Decoder
from fuse_traffic.models.fusion import FusionBlock, build_fusion
from fuse_traffic.models.stenc import STEncoder
from fuse_traffic.nn.rng import RngState
from fuse_traffic.nn.tensor import ArrayLike, Matrix, Parameter, Tensor
from fuse_traffic.schemas.config import ModelConfig, VariantName
from fuse_traffic.textenc.embedder import TextEncoder
from fuse_traffic.textenc.projection import Projection


@dataclass
class ForwardTrace:
    """Промежуточные представления одного прохода"""

    e_st: Tensor
    e_text: Tensor
    h_fused: Tensor
    y_hat: Tensor


class FuseTrafficModel:
    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        rng = RngState(seed)
        self.encoder = STEncoder(config.st, rng.stream("stenc"))
        self.projection = Projection(config.d_text, config.d, rng.stream("text_proj"))
        self.fusion: FusionBlock = build_fusion(config.fusion, config.d, rng.stream("fusion"))
        self.decoder = Decoder(config.d, config.h_out, rng.stream("decoder"))
        self.dropout_rng = rng.stream("dropout")

    @property
    def variant(self) -> VariantName:
        return self.config.variant

    def parameter_groups(self) -> Dict[str, List[Parameter]]:
        return {
            "st_encoder": self.encoder.parameters(),
            "projection": self.projection.parameters(),
            f"fusion.{self.fusion.kind}": self.fusion.parameters(),
            "decoder": self.decoder.parameters(),
        }

    def parameters(self) -> List[Parameter]:
        return [p for group in self.parameter_groups().values() for p in group]

    def named_parameters(self) -> Dict[str, Parameter]:
        return {p.name: p for p in self.parameters()}

    def text_input(self, text_emb: Matrix, x_shape: Sequence[int]) -> Matrix:
        """Эмбеддинги текста для прохода; в режиме disabled нули той же формы"""
        expected = (*x_shape[:-1], self.config.d_text)
        text_emb = np.asarray(text_emb, dtype=np.float64)
        if text_emb.shape != expected:
            raise ConfigurationError(f"text embeddings {text_emb.shape} do not match {expected}")
        if self.config.event_mode == "disabled":
            return np.zeros(expected)
        return text_emb

    def trace(
        self, x: ArrayLike, a_hat: Matrix, text_emb: Matrix, training: bool = False
    ) -> ForwardTrace:
        x = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
        if x.shape[-1] != self.config.h_in:
            raise ConfigurationError(
                f"input window has {x.shape[-1]} steps, model expects H_in={self.config.h_in}"
            )
        e_st = self.encoder(x, a_hat, training, self.dropout_rng if training else None)
        e_text = self.projection(self.text_input(text_emb, x.shape))
        h_fused = self.fusion(e_st, e_text)
        return ForwardTrace(e_st=e_st, e_text=e_text, h_fused=h_fused, y_hat=self.decoder(h_fused))

    def forward(
        self, x: ArrayLike, a_hat: Matrix, text_emb: Matrix, training: bool = False
    ) -> Tensor:
        return self.trace(x, a_hat, text_emb, training).y_hat

    def predict(self, x: ArrayLike, a_hat: Matrix, text_emb: Matrix) -> Matrix:
        """Нормализованный прогноз без режима обучения"""
        return self.forward(x, a_hat, text_emb, training=False).data


def forward(
    model: FuseTrafficModel,
    sample: WindowSample,
    events: Sequence[str],
    a_hat: Matrix,
    encoder: TextEncoder,
    text_emb: Optional[Matrix] = None,
) -> Matrix:
    """Ŷ (N×H_out, нормализованный) для одного окна и текстов событий сенсоров"""
    if len(events) != sample.x.shape[0]:
        raise ConfigurationError(f"got {len(events)} event texts for {sample.x.shape[0]} sensors")
    emb = encoder.embed(events) if text_emb is None else text_emb
    return model.predict(sample.x, a_hat, emb)
