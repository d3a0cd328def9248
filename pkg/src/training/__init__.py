"""Training | Experiment configs, learning-rate schedule, checkpoints and the training loop"""

from .config import (
    Setup,
    DataConfig,
    TrainConfig,
    NORMALIZED_SETUPS,
    PRESET_DIR,
    available_presets,
    load_config,
    apply_override,
)
from .schedule import lr_at, set_lr
from .checkpoint import Checkpoint, restore, select_best, checkpoint_path, load_checkpoints
from .trainer import Trainer, TrainingData, build_model, build_training_data, train

__all__ = [
    "Setup",
    "DataConfig",
    "TrainConfig",
    "NORMALIZED_SETUPS",
    "PRESET_DIR",
    "available_presets",
    "load_config",
    "apply_override",
    "lr_at",
    "set_lr",
    "Checkpoint",
    "restore",
    "select_best",
    "checkpoint_path",
    "load_checkpoints",
    "Trainer",
    "TrainingData",
    "build_model",
    "build_training_data",
    "train",
]
