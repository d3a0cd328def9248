"""Detector model | Encoder, optional hypersphere projection and linear head"""

import torch
import torch.nn as nn

from ..manifold import HeadParams, classify, fake_probability, l2_normalize
from .encoder import ImageEncoder

HEAD_PREFIX = "head."


class DeepfakeDetector(nn.Module):
    """Frozen-by-default encoder with a two-way linear head on its features"""

    def __init__(self, encoder: ImageEncoder, normalize: bool = False, head_init_std: float = 0.02):
        super().__init__()
        self.encoder = encoder
        self.normalize = normalize
        self.head = nn.Linear(encoder.spec.feature_dim, 2, device=encoder.pixel_mean.device)
        nn.init.normal_(self.head.weight, mean=0.0, std=head_init_std)
        nn.init.zeros_(self.head.bias)

    @property
    def feature_dim(self) -> int:
        return self.encoder.spec.feature_dim

    def head_params(self) -> HeadParams:
        return HeadParams.from_linear(self.head)

    def features(self, images: torch.Tensor) -> torch.Tensor:
        """Encoder features in float32, L2-normalized when the setup asks for it"""
        features = self.encoder(images).float()
        return l2_normalize(features) if self.normalize else features

    def classify(self, features: torch.Tensor) -> torch.Tensor:
        return classify(features, self.head_params())

    def forward(self, images: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        features = self.features(images)
        return self.classify(features), features

    @torch.no_grad()
    def predict(self, images: torch.Tensor) -> torch.Tensor:
        """Fake-class probability per image"""
        logits, _ = self(images)
        return fake_probability(logits)

    def trainable_state(self) -> dict[str, torch.Tensor]:
        """Detached CPU copies of every trainable tensor, keyed by parameter name"""
        return {
            name: param.detach().cpu().clone()
            for name, param in self.named_parameters()
            if param.requires_grad
        }
