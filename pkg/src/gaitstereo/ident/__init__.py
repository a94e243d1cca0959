"""Gait-based participant identification with a small Transformer encoder."""
from .checkpoint import load_checkpoint, save_checkpoint
from .data import FEATURES, GaitSequence, Standardizer, read_dataset, segment, sequence_from_steps, write_dataset
from .model import IdentModel, ModelConfig, grad_check
from .train import KFoldResult, TrainConfig, fit, shuffled_labels, train_kfold

__all__ = [
    "FEATURES", "GaitSequence", "IdentModel", "KFoldResult", "ModelConfig", "Standardizer",
    "TrainConfig", "fit", "grad_check", "load_checkpoint", "read_dataset", "save_checkpoint",
    "segment", "sequence_from_steps", "shuffled_labels", "train_kfold", "write_dataset",
]
