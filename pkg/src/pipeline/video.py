"""Video sources | Frame access for files and in-memory clips"""

from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Protocol

import cv2
import numpy as np

from ..errors import DecodeError, InputError

VIDEO_SUFFIXES = (".mp4", ".avi", ".mov", ".mkv", ".webm")


class VideoSource(Protocol):
    @property
    def frame_count(self) -> int: ...

    def read_frames(self, indices: Iterable[int]) -> Iterator[tuple[int, np.ndarray]]:
        """Yield (index, RGB frame) for the requested indices in increasing order"""
        ...


class OpenCVVideo:
    """Video file decoded with OpenCV, frames converted to RGB"""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.is_file():
            raise DecodeError(f"video not found: {self.path}")
        self._count = None

    @property
    def frame_count(self) -> int:
        if self._count is None:
            capture = self._open()
            try:
                count = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
                # container metadata can be missing, fall back to decoding
                if count <= 0:
                    count = 0
                    while capture.grab():
                        count += 1
            finally:
                capture.release()
            self._count = count
        return self._count

    def read_frames(self, indices: Iterable[int]) -> Iterator[tuple[int, np.ndarray]]:
        wanted = sorted(set(indices))
        if not wanted:
            return

        capture = self._open()
        try:
            position = 0
            for index in wanted:
                while position < index:
                    if not capture.grab():
                        return
                    position += 1
                ok, frame = capture.read()
                position += 1
                if not ok:
                    return
                yield index, cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
        finally:
            capture.release()

    def _open(self) -> cv2.VideoCapture:
        capture = cv2.VideoCapture(str(self.path))
        if not capture.isOpened():
            raise DecodeError(f"cannot decode video: {self.path}")
        return capture


class ArrayVideo:
    """In-memory clip of T x H x W x 3 RGB frames"""

    def __init__(self, frames: np.ndarray | list[np.ndarray]):
        self.frames = np.asarray(frames)
        if self.frames.size and (self.frames.ndim != 4 or self.frames.shape[-1] != 3):
            raise InputError(f"frames must be T x H x W x 3, got {self.frames.shape}")

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0]) if self.frames.size else 0

    def read_frames(self, indices: Iterable[int]) -> Iterator[tuple[int, np.ndarray]]:
        for index in sorted(set(indices)):
            if 0 <= index < self.frame_count:
                yield index, self.frames[index]


def write_video(path: str | Path, frames: np.ndarray, fps: float = 25.0) -> Path:
    """Encode RGB frames to a video file (MJPG in an .avi container)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width = frames.shape[1:3]
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, (width, height))
    try:
        for frame in frames:
            writer.write(cv2.cvtColor(np.ascontiguousarray(frame), cv2.COLOR_RGB2BGR))
    finally:
        writer.release()
    return path
