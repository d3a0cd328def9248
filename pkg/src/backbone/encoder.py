"""Image encoder | CLIP vision transformer wrapper producing classification-token features"""

import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F
from transformers import CLIPVisionConfig, CLIPVisionModel
from transformers.image_utils import OPENAI_CLIP_MEAN, OPENAI_CLIP_STD

from ..errors import ConfigurationError, ShapeError
from ..manifold import FeatureBatch

logger = logging.getLogger(__name__)

WEIGHTS_ENV = "DEEPFAKE_WEIGHTS"


@dataclass(frozen=True)
class EncoderSpec:
    """Architecture of a vision encoder and where its weights come from"""

    name: str
    input_side: int
    feature_dim: int
    patch_size: int
    num_layers: int
    num_heads: int
    intermediate_size: int
    pretrained: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.feature_dim <= 0 or self.input_side <= 0:
            raise ConfigurationError(f"{self.name}: feature_dim and input_side must be positive")
        if self.input_side % self.patch_size:
            raise ConfigurationError(
                f"{self.name}: input side {self.input_side} "
                f"not divisible by patch {self.patch_size}"
            )

    @property
    def patch_grid(self) -> tuple[int, int]:
        side = self.input_side // self.patch_size
        return (side, side)

    @property
    def token_count(self) -> int:
        rows, cols = self.patch_grid
        return rows * cols + 1

    def clip_config(self) -> CLIPVisionConfig:
        return CLIPVisionConfig(
            hidden_size=self.feature_dim,
            intermediate_size=self.intermediate_size,
            num_hidden_layers=self.num_layers,
            num_attention_heads=self.num_heads,
            image_size=self.input_side,
            patch_size=self.patch_size,
            num_channels=3,
            hidden_act="quick_gelu",
        )


LARGE_SPEC = EncoderSpec(
    name="clip-vit-l-14",
    input_side=224,
    feature_dim=1024,
    patch_size=14,
    num_layers=24,
    num_heads=16,
    intermediate_size=4096,
    pretrained="openai/clip-vit-large-patch14",
)

TOY_SPEC = EncoderSpec(
    name="toy",
    input_side=28,
    feature_dim=8,
    patch_size=14,
    num_layers=2,
    num_heads=2,
    intermediate_size=32,
    pretrained=None,
    seed=0,
)

ENCODER_SPECS = {"large": LARGE_SPEC, "toy": TOY_SPEC}


@dataclass(frozen=True)
class ParameterEntry:
    shape: tuple[int, ...]
    trainable: bool

    @property
    def count(self) -> int:
        total = 1
        for dim in self.shape:
            total *= dim
        return total


@dataclass
class NamedParameterTree:
    """Ordered name -> (shape, trainable) view of a module's parameters"""

    entries: dict[str, ParameterEntry] = field(default_factory=dict)

    @classmethod
    def from_module(cls, module: nn.Module) -> "NamedParameterTree":
        entries = {}
        for name, param in module.named_parameters():
            entries[name] = ParameterEntry(tuple(param.shape), param.requires_grad)
        return cls(entries)

    @property
    def names(self) -> list[str]:
        return list(self.entries)

    @property
    def total_count(self) -> int:
        return sum(entry.count for entry in self.entries.values())

    @property
    def trainable_count(self) -> int:
        return sum(entry.count for entry in self.entries.values() if entry.trainable)

    @property
    def trainable_names(self) -> list[str]:
        return [name for name, entry in self.entries.items() if entry.trainable]

    def count_matching(self, *fragments: str) -> int:
        """Parameter count over entries whose name contains any fragment"""
        return sum(
            entry.count
            for name, entry in self.entries.items()
            if any(fragment in name for fragment in fragments)
        )

    def __len__(self) -> int:
        return len(self.entries)


class ImageEncoder(nn.Module):
    """CLIP vision tower exposing the post-norm classification token.

    The token is taken after the final layer norm and before any image-to-text
    projection, which is the 1024-wide feature for ViT-L/14.
    """

    def __init__(self, spec: EncoderSpec, model: CLIPVisionModel, fingerprint: str):
        super().__init__()
        self.spec = spec
        self.model = model
        self.fingerprint = fingerprint
        mean = torch.tensor(OPENAI_CLIP_MEAN).view(1, 3, 1, 1)
        std = torch.tensor(OPENAI_CLIP_STD).view(1, 3, 1, 1)
        self.register_buffer("pixel_mean", mean, persistent=False)
        self.register_buffer("pixel_std", std, persistent=False)

    @classmethod
    def from_spec(
        cls,
        spec: EncoderSpec,
        weights: Optional[str | Path] = None,
        device: str | torch.device = "cpu",
    ) -> "ImageEncoder":
        """Build the encoder, loading pretrained weights when the EncoderSpec names a source.

        Weights resolve from the argument, then DEEPFAKE_WEIGHTS, then the
        pretrained hub id. Architectures without pretrained weights are seeded from spec.seed.
        """
        source = weights
        if source is None and spec.pretrained is not None:
            source = os.environ.get(WEIGHTS_ENV) or spec.pretrained

        if source is None:
            with torch.random.fork_rng(devices=[]):
                torch.manual_seed(spec.seed)
                model = CLIPVisionModel(spec.clip_config())
            fingerprint = f"init:{spec.name}:seed{spec.seed}"
        else:
            model = _load_pretrained(source, spec)
            fingerprint = _weights_fingerprint(source)
            _check_architecture(spec, model.config)

        model.requires_grad_(False)
        model.eval()
        logger.info("Encoder %s ready (%s)", spec.name, fingerprint)
        return cls(spec, model, fingerprint).to(device)

    @classmethod
    def skeleton(cls, spec: EncoderSpec) -> "ImageEncoder":
        """Architecture on the meta device: parameter names and shapes, no storage"""
        with torch.device("meta"):
            model = CLIPVisionModel(spec.clip_config())
        model.requires_grad_(False)
        return cls(spec, model, fingerprint=f"meta:{spec.name}")

    def preprocess(self, images: torch.Tensor) -> torch.Tensor:
        """Resize to the encoder's input side and apply CLIP channel normalization.

        Accepts B x 3 x H x W tensors, uint8 in [0, 255] or float in [0, 1].
        """
        if images.ndim != 4 or images.shape[1] != 3:
            raise ShapeError(f"expected B x 3 x H x W images, got {tuple(images.shape)}")

        pixels = images.float() / 255.0 if images.dtype == torch.uint8 else images.float()
        side = self.spec.input_side
        if pixels.shape[-2:] != (side, side) and pixels.shape[0]:
            pixels = F.interpolate(
                pixels, size=(side, side), mode="bicubic", align_corners=False, antialias=True
            ).clamp(0.0, 1.0)

        return (pixels - self.pixel_mean) / self.pixel_std

    def encode(self, pixel_values: torch.Tensor) -> torch.Tensor:
        """Classification-token features for preprocessed pixels, B x feature_dim"""
        side = self.spec.input_side
        if pixel_values.ndim != 4 or tuple(pixel_values.shape[1:]) != (3, side, side):
            raise ShapeError(
                f"{self.spec.name} expects B x 3 x {side} x {side}, got {tuple(pixel_values.shape)}"
            )
        if pixel_values.shape[0] == 0:
            return pixel_values.new_zeros((0, self.spec.feature_dim))

        outputs = self.model(pixel_values=pixel_values)
        return outputs.pooler_output

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.encode(self.preprocess(images))


def encode(
    encoder: ImageEncoder,
    images: torch.Tensor,
    labels: Optional[torch.Tensor | list[int]] = None,
    video_ids: Optional[list[str]] = None,
) -> FeatureBatch:
    """Encode raw images into a FeatureBatch (labels default to real, ids to row index)"""
    features = encoder(images)
    rows = features.shape[0]
    if labels is None:
        labels = torch.zeros(rows, dtype=torch.long)
    if video_ids is None:
        video_ids = [str(i) for i in range(rows)]

    return FeatureBatch(
        features=features,
        labels=torch.as_tensor(labels, dtype=torch.long, device=features.device),
        video_ids=list(video_ids),
        normalized=False,
    )


def parameter_tree(source: EncoderSpec | nn.Module) -> NamedParameterTree:
    """Parameter tree of a live module, or of a spec's architecture on the meta device"""
    if isinstance(source, EncoderSpec):
        source = ImageEncoder.skeleton(source)
    return NamedParameterTree.from_module(source)


def _load_pretrained(source: str | Path, spec: EncoderSpec) -> CLIPVisionModel:
    path = Path(source)
    looks_local = path.is_absolute() or str(source).startswith(".") or path.suffix

    if looks_local and not path.exists():
        raise ConfigurationError(f"Encoder weights not found: {path}")

    # a single state-dict file, as written by torch.save
    if path.is_file():
        model = CLIPVisionModel(spec.clip_config())
        try:
            model.load_state_dict(torch.load(path, map_location="cpu", weights_only=True))
        except (RuntimeError, OSError) as exc:
            raise ConfigurationError(f"Could not load encoder weights from {path}: {exc}") from exc
        return model

    try:
        return CLIPVisionModel.from_pretrained(str(source), torch_dtype=torch.float32)
    except OSError as exc:
        raise ConfigurationError(f"Could not load encoder weights from {source}: {exc}") from exc


def _weights_fingerprint(source: str | Path) -> str:
    """SHA-256 of a local weights file, or a stable label for directories and hub ids"""
    path = Path(source)
    if path.is_file():
        digest = hashlib.sha256()
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                digest.update(chunk)
        return f"sha256:{digest.hexdigest()}"
    if path.is_dir():
        return f"dir:{path.resolve()}"
    return f"hub:{source}"


def _check_architecture(spec: EncoderSpec, config: CLIPVisionConfig) -> None:
    if config.hidden_size != spec.feature_dim or config.num_hidden_layers != spec.num_layers:
        raise ConfigurationError(
            f"Weights are {config.num_hidden_layers} layers x {config.hidden_size} wide, "
            f"spec {spec.name} expects {spec.num_layers} x {spec.feature_dim}"
        )
