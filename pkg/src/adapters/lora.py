"""LoRA | Low-rank update math and injection beside frozen projections"""

import logging
from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F
from peft import LoraConfig, inject_adapter_in_model
from peft.tuners.lora import LoraLayer

from ..errors import ShapeError

logger = logging.getLogger(__name__)

ADAPTER_NAME = "default"
LORA_MARKERS = (".lora_A.", ".lora_B.")


def lora_forward(
    x: torch.Tensor,
    frozen_weight: torch.Tensor,
    factors: tuple[torch.Tensor, torch.Tensor],
    alpha: float,
    frozen_bias: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Frozen path plus (alpha / rank) * B @ A @ x.

    frozen_weight is out x in, A (first factor) is rank x in and B (second
    factor) is out x rank, matching nn.Linear storage.
    """
    first, second = factors
    rank = first.shape[0]

    if first.ndim != 2 or first.shape[1] != frozen_weight.shape[1]:
        raise ShapeError(
            f"first factor {tuple(first.shape)} does not fit weight {tuple(frozen_weight.shape)}"
        )
    if second.ndim != 2 or second.shape != (frozen_weight.shape[0], rank):
        raise ShapeError(
            f"second factor {tuple(second.shape)} must be {frozen_weight.shape[0]} x {rank}"
        )

    frozen = F.linear(x, frozen_weight, frozen_bias)
    return frozen + (alpha / rank) * F.linear(F.linear(x, first), second)


def lora_factors(layer: LoraLayer) -> tuple[torch.Tensor, torch.Tensor]:
    """(A, B) weights of an injected LoRA layer"""
    return layer.lora_A[ADAPTER_NAME].weight, layer.lora_B[ADAPTER_NAME].weight


def has_lora(module: nn.Module) -> bool:
    return any(isinstance(child, LoraLayer) for child in module.modules())


def lora_settings(module: nn.Module) -> dict[str, tuple[int, float]]:
    """name -> (rank, alpha) of every injected LoRA layer under module"""
    return {
        name: (child.r[ADAPTER_NAME], float(child.lora_alpha[ADAPTER_NAME]))
        for name, child in module.named_modules()
        if isinstance(child, LoraLayer)
    }


def inject_lora(
    module: nn.Module,
    target_names: list[str],
    rank: int,
    alpha: float,
    dropout: float = 0.0,
) -> nn.Module:
    """Wrap the named linear layers of module with LoRA factor pairs.

    The second factor starts at zero, so outputs are unchanged until the first
    optimizer step. Base weights stay frozen.
    """
    config = LoraConfig(
        r=rank,
        lora_alpha=alpha,
        lora_dropout=dropout,
        target_modules=target_names,
        bias="none",
    )
    inject_adapter_in_model(config, module, adapter_name=ADAPTER_NAME)
    logger.info("Injected rank-%d LoRA into %d layers", rank, len(target_names))
    return module
