"""Data pipeline | Frame sampling, face preprocessing, manifests, augmentation, splits, loaders"""

from .sampling import sample_frames, DEFAULT_FRAMES
from .geometry import expand_box, clamp_box, square_box, crop_face, align_face, eye_centers
from .detectors import Detection, FaceDetector, DlibFaceDetector, StaticFaceDetector, build_detector
from .video import VideoSource, OpenCVVideo, ArrayVideo, write_video
from .manifests import (
    FrameRecord,
    VideoManifest,
    ManifestWriter,
    read_manifests,
    write_manifests,
    resolve_data_root,
)
from .exclusions import Exclusion, ExclusionLedger
from .preprocess import (
    PreprocessSettings,
    PreprocessSummary,
    VideoJob,
    preprocess_video,
    preprocess_videos,
    discover_videos,
    read_png,
)
from .augment import AugmentationConfig, augment_image, build_augmentation, jpeg_compress
from .splits import SplitSpec, build_split
from .datasets import FrameDataset, build_loader
from .synthetic import (
    SyntheticConfig,
    SyntheticFrameDataset,
    PlantedFaceDetector,
    planted_face_video,
    write_planted_videos,
)

__all__ = [
    "sample_frames",
    "DEFAULT_FRAMES",
    "expand_box",
    "clamp_box",
    "square_box",
    "crop_face",
    "align_face",
    "eye_centers",
    "Detection",
    "FaceDetector",
    "DlibFaceDetector",
    "StaticFaceDetector",
    "build_detector",
    "VideoSource",
    "OpenCVVideo",
    "ArrayVideo",
    "write_video",
    "FrameRecord",
    "VideoManifest",
    "ManifestWriter",
    "read_manifests",
    "write_manifests",
    "resolve_data_root",
    "Exclusion",
    "ExclusionLedger",
    "PreprocessSettings",
    "PreprocessSummary",
    "VideoJob",
    "preprocess_video",
    "preprocess_videos",
    "discover_videos",
    "read_png",
    "AugmentationConfig",
    "augment_image",
    "build_augmentation",
    "jpeg_compress",
    "SplitSpec",
    "build_split",
    "FrameDataset",
    "build_loader",
    "SyntheticConfig",
    "SyntheticFrameDataset",
    "PlantedFaceDetector",
    "planted_face_video",
    "write_planted_videos",
]
