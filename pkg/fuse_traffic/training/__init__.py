from .checkpoint import (
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    from_model,
    load_checkpoint,
    restore_model,
    save_checkpoint,
)
from .loss import masked_mae
from .optimizer import Adam
from .trainer import (
    EarlyStopping,
    EpochRecord,
    TextBank,
    Trainer,
    TrainResult,
    batch_texts,
    evaluate_mae,
    predict_samples,
    train,
)

__all__ = [
    "Adam",
    "Checkpoint",
    "EarlyStopping",
    "EpochRecord",
    "TextBank",
    "TrainResult",
    "Trainer",
    "batch_texts",
    "decode_checkpoint",
    "encode_checkpoint",
    "evaluate_mae",
    "from_model",
    "load_checkpoint",
    "masked_mae",
    "predict_samples",
    "restore_model",
    "save_checkpoint",
    "train",
]
