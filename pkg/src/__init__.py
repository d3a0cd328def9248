"""Deepfake PEFT Toolkit | Parameter-efficient deepfake detection on a frozen CLIP vision encoder"""

from .errors import ToolkitError, ConfigurationError, InputError
from .backbone.encoder import ImageEncoder, EncoderSpec, LARGE_SPEC, TOY_SPEC
from .backbone.detector import DeepfakeDetector
from .adapters.adapter import AdapterSpec, Strategy, TrainabilityReport, apply_adapter
from .losses.objectives import LossWeights, composite
from .evaluation.metrics import PredictionSet, auroc, video_level_auroc
from .training.config import TrainConfig, load_config
from .training.trainer import Trainer, build_model, build_training_data

__version__ = "1.0.0"

__all__ = [
    "ToolkitError",
    "ConfigurationError",
    "InputError",
    "ImageEncoder",
    "EncoderSpec",
    "LARGE_SPEC",
    "TOY_SPEC",
    "DeepfakeDetector",
    "AdapterSpec",
    "Strategy",
    "TrainabilityReport",
    "apply_adapter",
    "LossWeights",
    "composite",
    "PredictionSet",
    "auroc",
    "video_level_auroc",
    "TrainConfig",
    "load_config",
    "Trainer",
    "build_model",
    "build_training_data",
]
