"""Manifests | Per-video frame records stored as line-delimited JSON"""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ..errors import InputError
from ..manifold import FAKE_LABEL, REAL_LABEL
from .geometry import Box
from .sampling import DEFAULT_FRAMES

logger = logging.getLogger(__name__)

DATA_ROOT_ENV = "DEEPFAKE_DATA_ROOT"
SPLITS = ("train", "val", "test")
LABEL_NAMES = {REAL_LABEL: "real", FAKE_LABEL: "fake"}
LABEL_VALUES = {name: value for value, name in LABEL_NAMES.items()}


@dataclass
class FrameRecord:
    """One preprocessed face crop; image_path is relative to the data root"""

    frame_index: int
    image_path: str
    face_box: Box
    landmarks_found: bool = False

    def to_dict(self) -> dict:
        return {
            "frame_index": self.frame_index,
            "image_path": self.image_path,
            "face_box": [round(v, 4) for v in self.face_box],
            "landmarks_found": self.landmarks_found,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FrameRecord":
        return cls(
            frame_index=int(data["frame_index"]),
            image_path=data["image_path"],
            face_box=tuple(float(v) for v in data["face_box"]),
            landmarks_found=bool(data.get("landmarks_found", False)),
        )


@dataclass
class VideoManifest:
    """A video's label, provenance and its sampled face frames"""

    video_id: str
    source_path: str
    label: int
    method_tag: str
    dataset: str
    split: str
    frames: list[FrameRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.label not in LABEL_NAMES:
            raise InputError(
                f"{self.video_id}: label must be 0 (real) or 1 (fake), got {self.label}"
            )
        if self.split not in SPLITS:
            raise InputError(f"{self.video_id}: unknown split {self.split!r}")
        if len(self.frames) > DEFAULT_FRAMES:
            raise InputError(f"{self.video_id}: {len(self.frames)} frames exceeds {DEFAULT_FRAMES}")

        indices = [frame.frame_index for frame in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise InputError(f"{self.video_id}: frame indices must be strictly increasing")

    @property
    def label_name(self) -> str:
        return LABEL_NAMES[self.label]

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "source_path": self.source_path,
            "label": self.label_name,
            "method_tag": self.method_tag,
            "dataset": self.dataset,
            "split": self.split,
            "frames": [frame.to_dict() for frame in self.frames],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VideoManifest":
        label = data["label"]
        if isinstance(label, str):
            if label not in LABEL_VALUES:
                raise InputError(f"{data.get('video_id')}: unknown label {label!r}")
            label = LABEL_VALUES[label]
        return cls(
            video_id=data["video_id"],
            source_path=data["source_path"],
            label=int(label),
            method_tag=data["method_tag"],
            dataset=data["dataset"],
            split=data["split"],
            frames=[FrameRecord.from_dict(frame) for frame in data.get("frames", [])],
        )


def read_manifests(path: str | Path) -> list[VideoManifest]:
    """Load every manifest from a JSONL file; blank lines are ignored"""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"manifest file not found: {path}")

    manifests = []
    with open(path) as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                manifests.append(VideoManifest.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise InputError(
                    f"{path}:{line_number}: malformed manifest record ({exc})"
                ) from exc
    return manifests


def write_manifests(path: str | Path, manifests: Iterable[VideoManifest]) -> Path:
    with ManifestWriter(path) as writer:
        for manifest in manifests:
            writer.write(manifest)
    return Path(path)


def resolve_data_root(manifest_path: str | Path, data_root: Optional[str | Path] = None) -> Path:
    """Explicit root, else DEEPFAKE_DATA_ROOT, else the manifest's own directory"""
    if data_root is not None:
        return Path(data_root)
    env_root = os.environ.get(DATA_ROOT_ENV)
    if env_root:
        return Path(env_root)
    return Path(manifest_path).resolve().parent


class ManifestWriter:
    """Single writer appending one manifest per line"""

    def __init__(self, path: str | Path, append: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "a" if append else "w")
        self.count = 0

    def write(self, manifest: VideoManifest) -> None:
        self._file.write(json.dumps(manifest.to_dict(), sort_keys=True) + "\n")
        self._file.flush()
        self.count += 1

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()
            logger.debug("Wrote %d manifests to %s", self.count, self.path)

    def __enter__(self) -> "ManifestWriter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
