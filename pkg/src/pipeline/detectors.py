"""Face detectors | Largest-face detection behind a pluggable interface"""

import logging
import os
from dataclasses import dataclass
from typing import Optional, Protocol, runtime_checkable

import numpy as np

from ..errors import ConfigurationError
from .geometry import Box

try:
    import dlib

    DLIB_AVAILABLE = True
except ImportError:
    DLIB_AVAILABLE = False

logger = logging.getLogger(__name__)

PREDICTOR_ENV = "DEEPFAKE_DLIB_PREDICTOR"


@dataclass
class Detection:
    """Face box (x1, y1, x2, y2) with optional N x 2 landmarks"""

    box: Box
    landmarks: Optional[np.ndarray] = None

    @property
    def area(self) -> float:
        x1, y1, x2, y2 = self.box
        return max(0.0, x2 - x1) * max(0.0, y2 - y1)


@runtime_checkable
class FaceDetector(Protocol):
    def detect_largest_face(self, image: np.ndarray) -> Optional[Detection]:
        """Largest face in an RGB frame, or None when there is none"""
        ...


class DlibFaceDetector:
    """HOG frontal face detector with an optional shape predictor for landmarks"""

    def __init__(self, predictor_path: Optional[str] = None, upsample: int = 0):
        if not DLIB_AVAILABLE:
            raise ConfigurationError("dlib is not installed; install the 'dlib' extra")

        self.upsample = upsample
        self._detector = dlib.get_frontal_face_detector()
        predictor_path = predictor_path or os.environ.get(PREDICTOR_ENV)
        self._predictor = None

        if predictor_path:
            if not os.path.exists(predictor_path):
                raise ConfigurationError(f"dlib shape predictor not found: {predictor_path}")
            self._predictor = dlib.shape_predictor(predictor_path)
        else:
            logger.warning("No dlib shape predictor configured, faces will not be aligned")

    def detect_largest_face(self, image: np.ndarray) -> Optional[Detection]:
        rects = self._detector(image, self.upsample)
        if len(rects) == 0:
            return None

        rect = max(rects, key=lambda r: r.width() * r.height())
        box = (float(rect.left()), float(rect.top()), float(rect.right()), float(rect.bottom()))

        landmarks = None
        if self._predictor is not None:
            shape = self._predictor(image, rect)
            landmarks = np.array(
                [(shape.part(i).x, shape.part(i).y) for i in range(shape.num_parts)],
                dtype=np.float64,
            )
        return Detection(box=box, landmarks=landmarks)


class StaticFaceDetector:
    """Returns a configured detection for every frame, or None for the listed misses.

    Calls are counted per instance, so misses refer to the order frames are fed.
    """

    def __init__(
        self,
        box: Optional[Box] = None,
        landmarks: Optional[np.ndarray] = None,
        miss_calls: frozenset[int] = frozenset(),
    ):
        self.box = box
        self.landmarks = None if landmarks is None else np.asarray(landmarks, dtype=np.float64)
        self.miss_calls = frozenset(miss_calls)
        self.calls = 0

    def detect_largest_face(self, image: np.ndarray) -> Optional[Detection]:
        call = self.calls
        self.calls += 1
        if self.box is None or call in self.miss_calls:
            return None
        return Detection(box=self.box, landmarks=self.landmarks)


def build_detector(kind: str = "dlib", predictor_path: Optional[str] = None) -> FaceDetector:
    """Detector factory used by preprocessing workers"""
    if kind == "dlib":
        return DlibFaceDetector(predictor_path=predictor_path)
    if kind == "planted":
        from .synthetic import PlantedFaceDetector

        return PlantedFaceDetector()
    raise ConfigurationError(f"Unknown face detector: {kind}")
