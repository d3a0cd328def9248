"""Backbone | Vision encoders, parameter trees, detector model"""

from .encoder import (
    EncoderSpec,
    ImageEncoder,
    NamedParameterTree,
    ParameterEntry,
    LARGE_SPEC,
    TOY_SPEC,
    ENCODER_SPECS,
    encode,
    parameter_tree,
)
from .detector import DeepfakeDetector, HEAD_PREFIX

__all__ = [
    "EncoderSpec",
    "ImageEncoder",
    "NamedParameterTree",
    "ParameterEntry",
    "LARGE_SPEC",
    "TOY_SPEC",
    "ENCODER_SPECS",
    "encode",
    "parameter_tree",
    "DeepfakeDetector",
    "HEAD_PREFIX",
]
