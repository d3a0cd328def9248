"""Synthetic data | Planted-face videos and a separable two-class frame dataset"""

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import cv2
import numpy as np
import torch
from torch.utils.data import Dataset

from ..manifold import FAKE_LABEL, REAL_LABEL
from .augment import AugmentationConfig, augment_image, build_augmentation
from .detectors import Detection
from .geometry import Box
from .video import ArrayVideo, write_video

FACE_LEVEL = 230
BACKGROUND_MAX = 100
DETECTION_THRESHOLD = 200


def planted_face_video(
    length: int = 40,
    side: int = 128,
    box: Optional[Box] = (40, 40, 88, 88),
    drift: tuple[int, int] = (0, 0),
    seed: int = 0,
) -> tuple[ArrayVideo, list[Optional[Box]]]:
    """Noise clip with a bright square face that moves by drift pixels per frame.

    Returns the clip and the true box of every frame (None when box is None).
    """
    rng = np.random.default_rng(seed)
    frames = rng.integers(0, BACKGROUND_MAX, size=(length, side, side, 3), dtype=np.uint8)
    boxes: list[Optional[Box]] = []

    for t in range(length):
        if box is None:
            boxes.append(None)
            continue
        x1, y1, x2, y2 = (int(v) for v in box)
        dx, dy = drift[0] * t, drift[1] * t
        current = (x1 + dx, y1 + dy, x2 + dx, y2 + dy)
        frames[t, current[1] : current[3], current[0] : current[2]] = FACE_LEVEL
        for eye_x, eye_y in _eye_points(current):
            frames[t, int(eye_y), int(eye_x)] = (20, 20, 20)
        boxes.append(tuple(float(v) for v in current))

    return ArrayVideo(frames), boxes


class PlantedFaceDetector:
    """Finds the bright square planted by planted_face_video"""

    def detect_largest_face(self, image: np.ndarray) -> Optional[Detection]:
        mask = (image.min(axis=2) > DETECTION_THRESHOLD).astype(np.uint8)
        points = cv2.findNonZero(mask)
        if points is None:
            return None
        x, y, w, h = cv2.boundingRect(points)
        box = (float(x), float(y), float(x + w), float(y + h))
        return Detection(box=box, landmarks=np.array(_eye_points(box), dtype=np.float64))


def write_planted_videos(
    root: str | Path,
    real: int = 2,
    fake: int = 2,
    faceless: int = 0,
    method_tag: str = "FS",
    length: int = 12,
    seed: int = 0,
) -> Path:
    """Write <root>/real/*.avi and <root>/fake/<method_tag>/*.avi clips on disk"""
    root = Path(root)
    counter = 0
    for label_dir, count in (("real", real), ("fake", fake)):
        for i in range(count):
            counter += 1
            clip, _ = planted_face_video(length=length, seed=seed + counter)
            folder = root / label_dir if label_dir == "real" else root / label_dir / method_tag
            write_video(folder / f"{label_dir}{i:03d}.avi", clip.frames)
    for i in range(faceless):
        counter += 1
        clip, _ = planted_face_video(length=length, box=None, seed=seed + counter)
        write_video(root / "fake" / method_tag / f"noface{i:03d}.avi", clip.frames)
    return root


@dataclass
class SyntheticConfig:
    """Size of the generated two-class frame dataset"""

    videos_per_class: int = 8
    val_videos_per_class: int = 4
    test_videos_per_class: int = 4
    frames_per_video: int = 4
    image_side: int = 28
    seed: int = 0
    dataset: str = "synthetic"

    def videos_for(self, split: str) -> int:
        return {
            "train": self.videos_per_class,
            "val": self.val_videos_per_class,
            "test": self.test_videos_per_class,
        }[split]

    def to_dict(self) -> dict:
        return asdict(self)


# class tints are far apart relative to the per-video and per-pixel noise
CLASS_TINTS = {
    REAL_LABEL: np.array([0.65, 0.40, 0.30]),
    FAKE_LABEL: np.array([0.30, 0.40, 0.65]),
}


class SyntheticFrameDataset(Dataset):
    """Frames of tinted noise clips, linearly separable by class color"""

    def __init__(
        self,
        config: SyntheticConfig,
        split: str = "train",
        train: bool = False,
        augmentation: Optional[AugmentationConfig] = None,
    ):
        self.config = config
        self.split = split
        self.train = train
        self.augmentation = augmentation or AugmentationConfig(enabled=False)
        self.epoch = 0
        self._transform = (
            build_augmentation(self.augmentation) if train and self.augmentation.enabled else None
        )

        split_offset = {"train": 0, "val": 1, "test": 2}[split]
        rng = np.random.default_rng([config.seed, split_offset])
        side = config.image_side
        images, items = [], []

        for label in (REAL_LABEL, FAKE_LABEL):
            for v in range(config.videos_for(split)):
                video_id = f"{config.dataset}_{split}_{label}_{v:03d}"
                tint = CLASS_TINTS[label] + rng.uniform(-0.06, 0.06, size=3)
                for f in range(config.frames_per_video):
                    noise = rng.normal(0.0, 0.04, size=(side, side, 3))
                    pixels = np.clip(tint + noise, 0.0, 1.0)
                    images.append((pixels * 255).round().astype(np.uint8).transpose(2, 0, 1))
                    items.append((label, video_id, f))

        if images:
            self.images = torch.from_numpy(np.stack(images))
        else:
            self.images = torch.empty(0, 3, side, side, dtype=torch.uint8)
        self.items = items

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    @property
    def labels(self) -> list[int]:
        return [label for label, _, _ in self.items]

    @property
    def video_labels(self) -> dict[str, int]:
        return {video_id: label for label, video_id, _ in self.items}

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index: int):
        label, video_id, frame_index = self.items[index]
        image = self.images[index]
        if self._transform is not None:
            rng = torch.Generator().manual_seed((self.config.seed + self.epoch) * 1_000_003 + index)
            image = augment_image(image, rng, True, self.augmentation, self._transform)
        return image, label, video_id, frame_index


def _eye_points(box: Box) -> list[tuple[float, float]]:
    x1, y1, x2, y2 = box
    width, height = x2 - x1, y2 - y1
    eye_y = y1 + height / 3.0
    return [(x1 + width / 3.0, eye_y), (x1 + 2.0 * width / 3.0, eye_y)]
