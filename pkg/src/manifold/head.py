"""Classifier head | Feature batches, linear binary head, fake-class scores"""

from dataclasses import dataclass, field

import torch

from ..errors import PreconditionError, ShapeError

REAL_LABEL = 0
FAKE_LABEL = 1
NORM_TOLERANCE = 1e-5


@dataclass
class FeatureBatch:
    """Per-frame feature rows with their labels and owning videos"""

    features: torch.Tensor
    labels: torch.Tensor
    video_ids: list[str] = field(default_factory=list)
    normalized: bool = False

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ShapeError(f"features must be B x D, got shape {tuple(self.features.shape)}")

        rows = self.features.shape[0]
        if self.labels.shape != (rows,):
            raise ShapeError(f"{rows} feature rows but labels of shape {tuple(self.labels.shape)}")
        if len(self.video_ids) != rows:
            raise ShapeError(f"{rows} feature rows but {len(self.video_ids)} video ids")

        if self.normalized and rows:
            norms = self.features.detach().float().norm(dim=1)
            if not torch.allclose(norms, torch.ones_like(norms), atol=NORM_TOLERANCE, rtol=0.0):
                raise PreconditionError("batch flagged normalized but rows are not unit length")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @classmethod
    def empty(cls, dim: int, normalized: bool = False) -> "FeatureBatch":
        return cls(
            features=torch.empty(0, dim),
            labels=torch.empty(0, dtype=torch.long),
            video_ids=[],
            normalized=normalized,
        )


@dataclass
class HeadParams:
    """Linear head parameters: weight is D x 2, bias is a 2-vector"""

    weight: torch.Tensor
    bias: torch.Tensor

    def __post_init__(self):
        if self.weight.ndim != 2 or self.weight.shape[1] != 2:
            raise ShapeError(f"head weight must be D x 2, got {tuple(self.weight.shape)}")
        if self.bias.shape != (2,):
            raise ShapeError(f"head bias must have shape (2,), got {tuple(self.bias.shape)}")

    @property
    def dim(self) -> int:
        return self.weight.shape[0]

    def is_finite(self) -> bool:
        return bool(torch.isfinite(self.weight).all() and torch.isfinite(self.bias).all())

    @classmethod
    def from_linear(cls, linear: torch.nn.Linear) -> "HeadParams":
        """View an nn.Linear(D, 2) (stored 2 x D) as D x 2 head parameters"""
        return cls(weight=linear.weight.t(), bias=linear.bias)


def classify(features: torch.Tensor, params: HeadParams) -> torch.Tensor:
    """Affine map features @ W + b producing B x 2 logits"""
    if features.ndim != 2 or features.shape[1] != params.dim:
        raise ShapeError(
            f"features of shape {tuple(features.shape)} do not match head dim {params.dim}"
        )
    return torch.addmm(params.bias, features, params.weight)


def fake_probability(logits: torch.Tensor) -> torch.Tensor:
    """Softmax component of the fake class; this is the score videos aggregate"""
    return torch.softmax(logits.float(), dim=-1)[..., FAKE_LABEL]
