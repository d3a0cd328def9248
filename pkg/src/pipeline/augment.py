"""Augmentation | Train-time flip, affine, blur, color jitter and JPEG compression"""

from dataclasses import asdict, dataclass
from typing import Optional

import torch
from torchvision.io import decode_jpeg, encode_jpeg
from torchvision.transforms import v2

from ..errors import ConfigurationError, InputError

SEED_RANGE = 2**62


@dataclass
class AugmentationConfig:
    """Strength of each augmentation family; enabled=False is the identity"""

    enabled: bool = True
    flip_p: float = 0.5
    affine_degrees: float = 10.0
    affine_translate: float = 0.05
    affine_scale: tuple[float, float] = (0.95, 1.05)
    blur_p: float = 0.3
    blur_kernel: int = 5
    blur_sigma: tuple[float, float] = (0.1, 2.0)
    jitter_p: float = 0.8
    brightness: float = 0.2
    contrast: float = 0.2
    saturation: float = 0.2
    hue: float = 0.05
    jpeg_p: float = 0.5
    jpeg_quality: tuple[int, int] = (60, 95)

    def __post_init__(self):
        self.affine_scale = tuple(self.affine_scale)
        self.blur_sigma = tuple(self.blur_sigma)
        self.jpeg_quality = tuple(int(q) for q in self.jpeg_quality)

        for name in ("flip_p", "blur_p", "jitter_p", "jpeg_p"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must be a probability, got {getattr(self, name)}")
        low, high = self.jpeg_quality
        if not 1 <= low <= high <= 100:
            raise ConfigurationError(
                f"jpeg_quality must satisfy 1 <= low <= high <= 100, got {self.jpeg_quality}"
            )
        if self.blur_kernel % 2 == 0:
            raise ConfigurationError(f"blur_kernel must be odd, got {self.blur_kernel}")

    def to_dict(self) -> dict:
        data = asdict(self)
        return {
            key: list(value) if isinstance(value, tuple) else value for key, value in data.items()
        }


def build_augmentation(config: AugmentationConfig) -> v2.Transform:
    """Composition of the five augmentation families on uint8 C x H x W tensors"""
    return v2.Compose([
        v2.RandomHorizontalFlip(p=config.flip_p),
        v2.RandomAffine(
            degrees=config.affine_degrees,
            translate=(config.affine_translate, config.affine_translate),
            scale=config.affine_scale,
        ),
        v2.RandomApply(
            [v2.GaussianBlur(config.blur_kernel, sigma=config.blur_sigma)], p=config.blur_p
        ),
        v2.RandomApply(
            [
                v2.ColorJitter(
                    brightness=config.brightness,
                    contrast=config.contrast,
                    saturation=config.saturation,
                    hue=config.hue,
                )
            ],
            p=config.jitter_p,
        ),
        v2.RandomApply([v2.JPEG(quality=config.jpeg_quality)], p=config.jpeg_p),
    ])


def augment_image(
    image: torch.Tensor,
    rng: torch.Generator,
    train: bool = True,
    config: Optional[AugmentationConfig] = None,
    transform: Optional[v2.Transform] = None,
) -> torch.Tensor:
    """Augment one image; eval mode or a disabled config returns the input itself.

    All randomness is drawn from rng, so the same generator state gives the
    same output.
    """
    config = config or AugmentationConfig()
    if not train or not config.enabled:
        return image
    _check_image(image)

    transform = transform or build_augmentation(config)
    seed = int(torch.randint(0, SEED_RANGE, (1,), generator=rng))
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return transform(image)


def jpeg_compress(image: torch.Tensor, quality: int) -> torch.Tensor:
    """Round-trip a uint8 image through the JPEG codec at the given quality"""
    _check_image(image)
    if not 1 <= quality <= 100:
        raise InputError(f"JPEG quality must be in [1, 100], got {quality}")
    return decode_jpeg(encode_jpeg(image, quality=quality))


def _check_image(image: torch.Tensor) -> None:
    if image.ndim != 3 or image.shape[0] != 3 or image.dtype != torch.uint8:
        raise InputError(
            f"expected a uint8 3 x H x W image, got {image.dtype} {tuple(image.shape)}"
        )
