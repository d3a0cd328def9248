"""Face geometry | Box expansion, eye-line alignment and square crops"""

import math
from typing import Optional

import cv2
import numpy as np

from ..errors import InputError

Box = tuple[float, float, float, float]

DEFAULT_MARGIN = 1.3
DEFAULT_SIZE = 256
MIN_ALIGN_ANGLE = 1e-3


def expand_box(box: Box, margin: float = DEFAULT_MARGIN) -> Box:
    """Scale an (x1, y1, x2, y2) box about its center"""
    x1, y1, x2, y2 = box
    if x2 <= x1 or y2 <= y1:
        raise InputError(f"degenerate face box {box}")
    cx, cy = (x1 + x2) / 2.0, (y1 + y2) / 2.0
    half_w, half_h = (x2 - x1) * margin / 2.0, (y2 - y1) * margin / 2.0
    return (cx - half_w, cy - half_h, cx + half_w, cy + half_h)


def clamp_box(box: Box, width: int, height: int) -> Box:
    x1, y1, x2, y2 = box
    return (max(0.0, x1), max(0.0, y1), min(float(width), x2), min(float(height), y2))


def square_box(box: Box) -> Box:
    """Grow the shorter side so the box is square about the same center"""
    x1, y1, x2, y2 = box
    side = max(x2 - x1, y2 - y1)
    cx, cy = (x1 + x2) / 2.0, (y1 + y2) / 2.0
    return (cx - side / 2.0, cy - side / 2.0, cx + side / 2.0, cy + side / 2.0)


def crop_face(image: np.ndarray, box: Box, size: int = DEFAULT_SIZE) -> np.ndarray:
    """Square crop of an expanded box resized to size x size.

    The region outside the image is filled by replicating edge pixels, so a box
    clamped at the border keeps its aspect ratio.
    """
    height, width = image.shape[:2]
    x1, y1, x2, y2 = (int(math.floor(v + 0.5)) for v in square_box(box))
    if x2 <= x1 or y2 <= y1:
        raise InputError(f"face box {box} is empty after rounding")

    cx1, cy1, cx2, cy2 = max(0, x1), max(0, y1), min(width, x2), min(height, y2)
    if cx2 <= cx1 or cy2 <= cy1:
        raise InputError(f"face box {box} lies outside the {width}x{height} image")

    crop = image[cy1:cy2, cx1:cx2]
    if (cx1, cy1, cx2, cy2) != (x1, y1, x2, y2):
        crop = cv2.copyMakeBorder(
            crop,
            top=cy1 - y1,
            bottom=y2 - cy2,
            left=cx1 - x1,
            right=x2 - cx2,
            borderType=cv2.BORDER_REPLICATE,
        )

    interpolation = cv2.INTER_AREA if crop.shape[0] > size else cv2.INTER_CUBIC
    return cv2.resize(crop, (size, size), interpolation=interpolation)


def eye_centers(landmarks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(left, right) eye centers in image coordinates.

    Supports the 68-point layout (eyes at 36-41 and 42-47), the 5-point layout
    starting with both eyes, and a bare pair of eye points.
    """
    points = np.asarray(landmarks, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise InputError(f"landmarks must be N x 2, got {points.shape}")

    if points.shape[0] == 68:
        return points[36:42].mean(axis=0), points[42:48].mean(axis=0)
    if points.shape[0] in (5, 2):
        return points[0], points[1]
    raise InputError(f"unsupported landmark count {points.shape[0]}")


def align_face(
    image: np.ndarray, box: Box, landmarks: Optional[np.ndarray]
) -> tuple[np.ndarray, Box, Optional[np.ndarray]]:
    """Rotate the frame about the eye midpoint so the eyes lie on a horizontal line.

    The box center and landmarks follow the rotation; the box keeps its size.
    Frames without landmarks, or already level, are returned untouched.
    """
    if landmarks is None:
        return image, box, None

    left, right = eye_centers(landmarks)
    angle = math.degrees(math.atan2(right[1] - left[1], right[0] - left[0]))
    if abs(angle) < MIN_ALIGN_ANGLE:
        return image, box, landmarks

    center = (float((left[0] + right[0]) / 2.0), float((left[1] + right[1]) / 2.0))
    matrix = cv2.getRotationMatrix2D(center, angle, 1.0)
    height, width = image.shape[:2]
    rotated = cv2.warpAffine(
        image, matrix, (width, height), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE
    )

    x1, y1, x2, y2 = box
    box_center = _transform_points(matrix, np.array([[(x1 + x2) / 2.0, (y1 + y2) / 2.0]]))[0]
    half_w, half_h = (x2 - x1) / 2.0, (y2 - y1) / 2.0
    moved_box = (
        float(box_center[0] - half_w),
        float(box_center[1] - half_h),
        float(box_center[0] + half_w),
        float(box_center[1] + half_h),
    )
    return rotated, moved_box, _transform_points(matrix, np.asarray(landmarks, dtype=np.float64))


def _transform_points(matrix: np.ndarray, points: np.ndarray) -> np.ndarray:
    return cv2.transform(points.reshape(-1, 1, 2), matrix).reshape(-1, 2)
