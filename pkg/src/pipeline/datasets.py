"""Frame datasets | Manifest-backed face crops and batch loading"""

import logging
from pathlib import Path
from typing import Optional

import torch
from torch.utils.data import DataLoader, Dataset
from torchvision.io import ImageReadMode, read_image

from ..errors import InputError
from .augment import AugmentationConfig, augment_image, build_augmentation
from .manifests import VideoManifest

logger = logging.getLogger(__name__)

FrameItem = tuple[torch.Tensor, int, str, int]


class FrameDataset(Dataset):
    """Every frame of every manifest as (uint8 image, label, video_id, frame_index)"""

    def __init__(
        self,
        manifests: list[VideoManifest],
        data_root: str | Path,
        train: bool = False,
        augmentation: Optional[AugmentationConfig] = None,
        seed: int = 0,
    ):
        self.data_root = Path(data_root)
        self.train = train
        self.augmentation = augmentation or AugmentationConfig(enabled=False)
        self.seed = seed
        self.epoch = 0
        self._transform = (
            build_augmentation(self.augmentation) if train and self.augmentation.enabled else None
        )

        self.items = [
            (frame.image_path, manifest.label, manifest.video_id, frame.frame_index)
            for manifest in manifests
            for frame in manifest.frames
        ]
        logger.debug("%d frames from %d videos (train=%s)", len(self.items), len(manifests), train)

    def set_epoch(self, epoch: int) -> None:
        """Reseed augmentation so each epoch sees different but reproducible draws"""
        self.epoch = epoch

    @property
    def labels(self) -> list[int]:
        return [label for _, label, _, _ in self.items]

    @property
    def video_labels(self) -> dict[str, int]:
        return {video_id: label for _, label, video_id, _ in self.items}

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index: int) -> FrameItem:
        image_path, label, video_id, frame_index = self.items[index]
        path = self.data_root / image_path
        if not path.is_file():
            raise InputError(f"frame image missing: {path}")

        image = read_image(str(path), mode=ImageReadMode.RGB)
        if self._transform is not None:
            rng = torch.Generator().manual_seed(_item_seed(self.seed, self.epoch, index))
            image = augment_image(image, rng, True, self.augmentation, self._transform)
        return image, label, video_id, frame_index


def build_loader(
    dataset: Dataset,
    batch_size: int,
    shuffle: bool = False,
    seed: int = 0,
    workers: int = 0,
) -> DataLoader:
    """Batches of (images, labels, video_ids, frame_indices).

    Worker processes prefetch a bounded number of batches ahead of the optimizer.
    """
    return DataLoader(
        dataset,
        batch_size=batch_size,
        shuffle=shuffle,
        generator=torch.Generator().manual_seed(seed),
        num_workers=workers,
        prefetch_factor=2 if workers else None,
        drop_last=False,
    )


def _item_seed(seed: int, epoch: int, index: int) -> int:
    return (seed * 1_000_003 + epoch) * 1_000_003 + index
