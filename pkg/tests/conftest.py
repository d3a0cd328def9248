"""Test configuration | Setup for pytest"""

import sys
from pathlib import Path

import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.backbone import TOY_SPEC, DeepfakeDetector, ImageEncoder  # noqa: E402


@pytest.fixture
def toy_encoder():
    """Seeded toy encoder, no pretrained weights"""
    return ImageEncoder.from_spec(TOY_SPEC)


@pytest.fixture
def toy_detector(toy_encoder):
    torch.manual_seed(0)
    return DeepfakeDetector(toy_encoder, normalize=True)


@pytest.fixture
def unit_rows():
    """Factory for float64 unit-norm feature rows"""

    def make(rows: int, dim: int, seed: int = 0) -> torch.Tensor:
        generator = torch.Generator().manual_seed(seed)
        x = torch.randn(rows, dim, generator=generator, dtype=torch.float64)
        return x / x.norm(dim=1, keepdim=True)

    return make
