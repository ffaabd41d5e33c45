from .decoder import Decoder
from .fuse_model import ForwardTrace, FuseTrafficModel, forward
from .fusion import (
    AddFusion,
    ConcatFusion,
    CrossAttentionFusion,
    FeedForward,
    FusionBlock,
    GatingFusion,
    attention_weights,
    build_fusion,
    cross_attention_fuse,
    variant_fuse,
)
from .stenc import STEncoder, STLayer, encode

__all__ = [
    "AddFusion",
    "ConcatFusion",
    "CrossAttentionFusion",
    "Decoder",
    "FeedForward",
    "ForwardTrace",
    "FuseTrafficModel",
    "FusionBlock",
    "GatingFusion",
    "STEncoder",
    "STLayer",
    "attention_weights",
    "build_fusion",
    "cross_attention_fuse",
    "encode",
    "forward",
    "variant_fuse",
]
