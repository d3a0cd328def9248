"""Hyperspherical head | L2 normalization, slerp augmentation, linear classifier"""

from .head import FeatureBatch, HeadParams, classify, fake_probability, REAL_LABEL, FAKE_LABEL
from .sphere import l2_normalize, slerp, slerp_augment_batch, sample_same_class_partners

__all__ = [
    "FeatureBatch",
    "HeadParams",
    "classify",
    "fake_probability",
    "REAL_LABEL",
    "FAKE_LABEL",
    "l2_normalize",
    "slerp",
    "slerp_augment_batch",
    "sample_same_class_partners",
]
