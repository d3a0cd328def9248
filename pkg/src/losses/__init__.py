"""Losses | Composite objective over head logits and encoder features"""

from .objectives import (
    LossWeights,
    LossBreakdown,
    TERMS,
    cross_entropy,
    alignment_loss,
    uniformity_loss,
    supcon_loss,
    composite,
)

__all__ = [
    "LossWeights",
    "LossBreakdown",
    "TERMS",
    "cross_entropy",
    "alignment_loss",
    "uniformity_loss",
    "supcon_loss",
    "composite",
]
