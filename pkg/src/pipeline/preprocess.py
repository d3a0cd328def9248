"""Face preprocessing | Sample, detect, align, expand, crop and save face frames per video"""

import logging
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import cv2
import numpy as np
from tqdm import tqdm

from ..errors import ConfigurationError, DecodeError, EmptyVideoError, InputError
from ..monitoring import HostMonitor, default_worker_count
from .detectors import FaceDetector
from .exclusions import ExclusionLedger
from .geometry import DEFAULT_MARGIN, DEFAULT_SIZE, align_face, crop_face, expand_box
from .manifests import LABEL_NAMES, LABEL_VALUES, FrameRecord, ManifestWriter, VideoManifest
from .sampling import DEFAULT_FRAMES, sample_frames
from .video import VIDEO_SUFFIXES, OpenCVVideo, VideoSource

logger = logging.getLogger(__name__)

NO_FACE_REASON = "no face detected in any sampled frame"


@dataclass(frozen=True)
class PreprocessSettings:
    frames: int = DEFAULT_FRAMES
    margin: float = DEFAULT_MARGIN
    size: int = DEFAULT_SIZE

    def __post_init__(self):
        if not 1 <= self.frames <= DEFAULT_FRAMES:
            raise ConfigurationError(f"frames must be in [1, {DEFAULT_FRAMES}], got {self.frames}")
        if self.margin < 1.0:
            raise ConfigurationError(f"margin must be >= 1.0, got {self.margin}")
        if self.size < 1:
            raise ConfigurationError(f"crop size must be >= 1, got {self.size}")


@dataclass(frozen=True)
class VideoJob:
    """One video to preprocess and the labels its manifest will carry"""

    path: str
    video_id: str
    label: int
    method_tag: str
    dataset: str
    split: str = "test"


@dataclass
class PreprocessSummary:
    manifests: list[VideoManifest] = field(default_factory=list)
    excluded: int = 0
    dropped_frames: int = 0

    @property
    def processed(self) -> int:
        return len(self.manifests)


def preprocess_video(
    source: VideoSource,
    detector: FaceDetector,
    *,
    video_id: str,
    label: int,
    method_tag: str,
    dataset: str,
    split: str,
    output_dir: str | Path,
    source_path: str = "",
    settings: PreprocessSettings = PreprocessSettings(),
    ledger: Optional[ExclusionLedger] = None,
) -> Optional[VideoManifest]:
    """Write 256x256 PNG face crops for the sampled frames of one video.

    Frames without a detected face are dropped. A video with no face in any
    sampled frame is excluded: it is recorded in the ledger and None is returned.
    Image paths in the manifest are relative to output_dir.
    """
    output_dir = Path(output_dir)
    indices = sample_frames(source.frame_count, settings.frames)
    frame_dir = Path("frames") / dataset / video_id
    (output_dir / frame_dir).mkdir(parents=True, exist_ok=True)

    records = []
    for index, frame in source.read_frames(indices):
        detection = detector.detect_largest_face(frame)
        if detection is None:
            logger.debug("%s frame %d: no face", video_id, index)
            continue

        try:
            aligned, box, _ = align_face(frame, detection.box, detection.landmarks)
            face_box = expand_box(box, settings.margin)
            crop = crop_face(aligned, face_box, settings.size)
        except InputError as exc:
            logger.debug("%s frame %d: unusable face box (%s)", video_id, index, exc)
            continue

        relative = frame_dir / f"{index:05d}.png"
        if not cv2.imwrite(str(output_dir / relative), cv2.cvtColor(crop, cv2.COLOR_RGB2BGR)):
            raise InputError(f"could not write {output_dir / relative}")

        records.append(
            FrameRecord(
                frame_index=index,
                image_path=relative.as_posix(),
                face_box=tuple(float(v) for v in face_box),
                landmarks_found=detection.landmarks is not None,
            )
        )

    dropped = len(indices) - len(records)
    if dropped:
        logger.info("%s: dropped %d of %d sampled frames", video_id, dropped, len(indices))

    if not records:
        if ledger is not None:
            ledger.record(video_id, dataset, LABEL_NAMES[label], NO_FACE_REASON, len(indices))
        else:
            logger.warning("Excluded %s/%s: %s", dataset, video_id, NO_FACE_REASON)
        return None

    return VideoManifest(
        video_id=video_id,
        source_path=source_path,
        label=label,
        method_tag=method_tag,
        dataset=dataset,
        split=split,
        frames=records,
    )


def discover_videos(input_dir: str | Path, dataset: str, split: str = "test") -> list[VideoJob]:
    """Videos laid out as <input>/<real|fake>/[<method>/]<name>.<ext>.

    The method tag is the subfolder under fake/ (or the dataset name when the
    video sits directly under real/ or fake/). Video ids are unique per dataset.
    """
    input_dir = Path(input_dir)
    jobs = []

    for label_name, label in sorted(LABEL_VALUES.items()):
        root = input_dir / label_name
        if not root.is_dir():
            continue
        for path in sorted(root.rglob("*")):
            if path.suffix.lower() not in VIDEO_SUFFIXES:
                continue
            relative = path.relative_to(root)
            method_tag = relative.parts[0] if len(relative.parts) > 1 else dataset
            video_id = "_".join((label_name,) + relative.with_suffix("").parts)
            jobs.append(VideoJob(str(path), video_id, label, method_tag, dataset, split))

    if not jobs:
        raise InputError(f"no videos found under {input_dir}/real or {input_dir}/fake")
    return jobs


def preprocess_videos(
    jobs: list[VideoJob],
    detector_factory: Callable[[], FaceDetector],
    output_dir: str | Path,
    manifest_name: str = "manifest.jsonl",
    settings: PreprocessSettings = PreprocessSettings(),
    workers: Optional[int] = None,
) -> PreprocessSummary:
    """Preprocess videos in a process pool, one video per task.

    detector_factory must be picklable; each worker builds its own detector.
    Manifests and exclusions are written only from the calling process.
    """
    output_dir = Path(output_dir)
    ledger = ExclusionLedger(output_dir)
    workers = workers or default_worker_count()
    summary = PreprocessSummary()

    with ManifestWriter(output_dir / manifest_name) as writer:
        if workers == 1:
            detector = detector_factory()
            outcomes = (_run_job(job, detector, output_dir, settings) for job in jobs)
            _collect(jobs, outcomes, writer, ledger, summary)
        else:
            with ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker, initargs=(detector_factory,)
            ) as pool:
                outcomes = pool.map(
                    _run_job_in_worker, jobs, [output_dir] * len(jobs), [settings] * len(jobs)
                )
                _collect(jobs, outcomes, writer, ledger, summary)

    logger.info(
        "Preprocessed %d videos, excluded %d, dropped %d frames",
        summary.processed,
        summary.excluded,
        summary.dropped_frames,
    )
    HostMonitor().log_snapshot("preprocess")
    return summary


@dataclass
class JobOutcome:
    manifest: Optional[VideoManifest]
    sampled: int
    reason: Optional[str] = None


def _collect(jobs, outcomes, writer, ledger, summary) -> None:
    for job, outcome in tqdm(zip(jobs, outcomes), total=len(jobs), desc="videos"):
        if outcome.manifest is None:
            ledger.record(
                job.video_id,
                job.dataset,
                LABEL_NAMES[job.label],
                outcome.reason or NO_FACE_REASON,
                outcome.sampled,
            )
            summary.excluded += 1
            continue
        summary.dropped_frames += outcome.sampled - len(outcome.manifest.frames)
        writer.write(outcome.manifest)
        summary.manifests.append(outcome.manifest)


def _run_job(
    job: VideoJob, detector: FaceDetector, output_dir: Path, settings: PreprocessSettings
) -> JobOutcome:
    try:
        source = OpenCVVideo(job.path)
        sampled = len(sample_frames(source.frame_count, settings.frames))
        manifest = preprocess_video(
            source,
            detector,
            video_id=job.video_id,
            label=job.label,
            method_tag=job.method_tag,
            dataset=job.dataset,
            split=job.split,
            output_dir=output_dir,
            source_path=job.path,
            settings=settings,
        )
    except (DecodeError, EmptyVideoError) as exc:
        return JobOutcome(manifest=None, sampled=0, reason=str(exc))
    return JobOutcome(manifest=manifest, sampled=sampled)


_worker_detector: Optional[FaceDetector] = None


def _init_worker(detector_factory: Callable[[], FaceDetector]) -> None:
    global _worker_detector
    _worker_detector = detector_factory()


def _run_job_in_worker(job: VideoJob, output_dir: Path, settings: PreprocessSettings) -> JobOutcome:
    return _run_job(job, _worker_detector, output_dir, settings)


def read_png(path: str | Path) -> np.ndarray:
    """RGB array of a saved face crop"""
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise InputError(f"cannot read image {path}")
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)
