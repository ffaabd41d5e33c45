"""
Блоки слияния E_st и E_text.

Основной вариант: кросс-внимание, запросы из E_st, ключи и значения из
E_text, внимание полное N×N между узлами, затем остаточный LayerNorm и FFN
с ещё одним остаточным LayerNorm. Необязательный обучаемый сдвиг диагонали
логитов (по голове) усиливает внимание узла к собственному тексту.
Варианты абляции: gating, add, concat.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import List, Optional, Tuple

import numpy as np

from fuse_traffic.core.errors import ConfigurationError, ShapeError
from fuse_traffic.nn.rng import xavier_init
from fuse_traffic.nn.tensor import (
    ArrayLike,
    Parameter,
    Tensor,
    add,
    concat_cols,
    layer_norm_rows,
    matmul,
    mul,
    relu,
    scale,
    sigmoid,
    slice_cols,
    softmax_rows,
    transpose,
)
from fuse_traffic.schemas.config import FusionConfig, FusionKind


def _as_tensor(x: ArrayLike) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_pair(e_st: Tensor, e_text: Tensor, d: int) -> None:
    if e_st.shape != e_text.shape:
        raise ShapeError(f"fusion inputs differ in shape: {e_st.shape} vs {e_text.shape}")
    if e_st.shape[-1] != d:
        raise ShapeError(f"fusion expects width {d}, got {e_st.shape[-1]}")


class FusionBlock(ABC):
    kind: FusionKind

    def __init__(self, d: int):
        self.d = d

    @abstractmethod
    def parameters(self) -> List[Parameter]: ...

    @abstractmethod
    def forward(self, e_st: Tensor, e_text: Tensor) -> Tensor: ...

    def __call__(self, e_st: ArrayLike, e_text: ArrayLike) -> Tensor:
        return variant_fuse(self, e_st, e_text)


class FeedForward:
    """FFN глубины l: d → d_ff → … → d_ff → d, ReLU между слоями"""

    def __init__(self, d: int, layers: int, mult: int, rng: np.random.Generator, prefix: str):
        d_ff = d * mult
        dims = [d] + [d_ff] * (layers - 1) + [d]
        self.layers: List[Tuple[Parameter, Parameter]] = [
            (
                Parameter(xavier_init(dims[i], dims[i + 1], rng), f"{prefix}.{i}.w"),
                Parameter(np.zeros((1, dims[i + 1])), f"{prefix}.{i}.b"),
            )
            for i in range(layers)
        ]

    def parameters(self) -> List[Parameter]:
        return [p for pair in self.layers for p in pair]

    def __call__(self, h: Tensor) -> Tensor:
        for i, (w, b) in enumerate(self.layers):
            h = add(matmul(h, w), b)
            if i < len(self.layers) - 1:
                h = relu(h)
        return h


class CrossAttentionFusion(FusionBlock):
    kind: FusionKind = "cross_attention"

    def __init__(
        self,
        d: int,
        heads: int,
        ffn_layers: int,
        ffn_mult: int,
        rng: np.random.Generator,
        self_bias: Optional[float] = None,
    ):
        if heads < 1 or d % heads:
            raise ConfigurationError(f"model width {d} is not divisible by {heads} heads")
        super().__init__(d)
        self.heads = heads
        self.head_dim = d // heads
        self.wq = Parameter(xavier_init(d, d, rng), "fusion.wq")
        self.wk = Parameter(xavier_init(d, d, rng), "fusion.wk")
        self.wv = Parameter(xavier_init(d, d, rng), "fusion.wv")
        self.wo = Parameter(xavier_init(d, d, rng), "fusion.wo")
        self.ln1_gamma = Parameter(np.ones((1, d)), "fusion.ln1.gamma")
        self.ln1_beta = Parameter(np.zeros((1, d)), "fusion.ln1.beta")
        self.ln2_gamma = Parameter(np.ones((1, d)), "fusion.ln2.gamma")
        self.ln2_beta = Parameter(np.zeros((1, d)), "fusion.ln2.beta")
        self.ffn = FeedForward(d, ffn_layers, ffn_mult, rng, "fusion.ffn")
        self.self_bias: Optional[Parameter] = None
        if self_bias is not None:
            self.self_bias = Parameter(np.full((1, heads), self_bias), "fusion.self_bias")

    def parameters(self) -> List[Parameter]:
        return [
            self.wq,
            self.wk,
            self.wv,
            self.wo,
            self.ln1_gamma,
            self.ln1_beta,
            self.ln2_gamma,
            self.ln2_beta,
            *self.ffn.parameters(),
            *([self.self_bias] if self.self_bias is not None else []),
        ]

    def _heads(self, e_st: Tensor, e_text: Tensor) -> List[Tuple[Tensor, Tensor]]:
        """Карты внимания и значения по головам"""
        q = matmul(e_st, self.wq)
        k = matmul(e_text, self.wk)
        v = matmul(e_text, self.wv)
        inv_sqrt = 1.0 / math.sqrt(self.head_dim)
        out = []
        for i in range(self.heads):
            lo, hi = i * self.head_dim, (i + 1) * self.head_dim
            scores = scale(matmul(slice_cols(q, lo, hi), transpose(slice_cols(k, lo, hi))), inv_sqrt)
            if self.self_bias is not None:
                eye = np.eye(scores.shape[-1])
                scores = add(scores, mul(slice_cols(self.self_bias, i, i + 1), eye))
            out.append((softmax_rows(scores), slice_cols(v, lo, hi)))
        return out

    def attend(self, e_st: Tensor, e_text: Tensor) -> Tensor:
        heads = [matmul(attn, v) for attn, v in self._heads(e_st, e_text)]
        return matmul(concat_cols(heads), self.wo)

    def forward(self, e_st: Tensor, e_text: Tensor) -> Tensor:
        h_c = layer_norm_rows(add(self.attend(e_st, e_text), e_st), self.ln1_gamma, self.ln1_beta)
        return layer_norm_rows(add(h_c, self.ffn(h_c)), self.ln2_gamma, self.ln2_beta)


class GatingFusion(FusionBlock):
    """LN(σ(g)⊙E_st + (1−σ(g))⊙E_text), g: обучаемый вектор 1×d"""

    kind: FusionKind = "gating"

    def __init__(self, d: int):
        super().__init__(d)
        self.gate = Parameter(np.zeros((1, d)), "fusion.gate")
        self.ln_gamma = Parameter(np.ones((1, d)), "fusion.ln.gamma")
        self.ln_beta = Parameter(np.zeros((1, d)), "fusion.ln.beta")

    def parameters(self) -> List[Parameter]:
        return [self.gate, self.ln_gamma, self.ln_beta]

    def forward(self, e_st: Tensor, e_text: Tensor) -> Tensor:
        s = sigmoid(self.gate)
        mixed = add(mul(s, e_st), mul(1.0 - s, e_text))
        return layer_norm_rows(mixed, self.ln_gamma, self.ln_beta)


class AddFusion(FusionBlock):
    kind: FusionKind = "add"

    def parameters(self) -> List[Parameter]:
        return []

    def forward(self, e_st: Tensor, e_text: Tensor) -> Tensor:
        return add(e_st, e_text)


class ConcatFusion(FusionBlock):
    """[E_st ‖ E_text]·W_c без выравнивания"""

    kind: FusionKind = "concat"

    def __init__(self, d: int, rng: np.random.Generator):
        super().__init__(d)
        self.w_c = Parameter(xavier_init(2 * d, d, rng), "fusion.concat.w")

    def parameters(self) -> List[Parameter]:
        return [self.w_c]

    def forward(self, e_st: Tensor, e_text: Tensor) -> Tensor:
        return matmul(concat_cols([e_st, e_text]), self.w_c)


def build_fusion(config: FusionConfig, d: int, rng: np.random.Generator) -> FusionBlock:
    if config.kind == "cross_attention":
        return CrossAttentionFusion(
            d, config.heads, config.ffn_layers, config.ffn_mult, rng, config.self_bias
        )
    if config.kind == "gating":
        return GatingFusion(d)
    if config.kind == "add":
        return AddFusion(d)
    if config.kind == "concat":
        return ConcatFusion(d, rng)
    raise ConfigurationError(f"unknown fusion kind {config.kind!r}")


def variant_fuse(block: FusionBlock, e_st: ArrayLike, e_text: ArrayLike) -> Tensor:
    e_st, e_text = _as_tensor(e_st), _as_tensor(e_text)
    _check_pair(e_st, e_text, block.d)
    return block.forward(e_st, e_text)


def cross_attention_fuse(
    e_st: ArrayLike, e_text: ArrayLike, params: CrossAttentionFusion
) -> Tensor:
    return variant_fuse(params, e_st, e_text)


def attention_weights(
    e_st: ArrayLike, e_text: ArrayLike, params: CrossAttentionFusion
) -> np.ndarray:
    """Карты softmax по головам: (h, …, N, N), строки суммируются в 1"""
    e_st, e_text = _as_tensor(e_st), _as_tensor(e_text)
    _check_pair(e_st, e_text, params.d)
    return np.stack([attn.data for attn, _ in params._heads(e_st, e_text)])
