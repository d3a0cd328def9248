"""Parameter-efficient fine-tuning | LN-tuning, bias tuning, LoRA, trainability accounting"""

from .adapter import (
    AdapterSpec,
    Strategy,
    TrainabilityReport,
    DEFAULT_PATTERNS,
    apply_adapter,
)
from .lora import lora_forward, lora_factors, lora_settings, inject_lora, has_lora

__all__ = [
    "AdapterSpec",
    "Strategy",
    "TrainabilityReport",
    "DEFAULT_PATTERNS",
    "apply_adapter",
    "lora_forward",
    "lora_factors",
    "lora_settings",
    "inject_lora",
    "has_lora",
]
