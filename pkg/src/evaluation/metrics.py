"""Video-level metrics | Frame score aggregation and rank-statistic AUROC"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from ..errors import InputError, UndefinedMetricError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictionRecord:
    video_id: str
    frame_index: int
    fake_score: float


@dataclass
class PredictionSet:
    """Per-frame fake scores of one dataset, with the label of every video"""

    records: list[PredictionRecord] = field(default_factory=list)
    labels: dict[str, int] = field(default_factory=dict)
    dataset_tag: str = ""

    def __post_init__(self):
        for record in self.records:
            if record.video_id not in self.labels:
                raise InputError(f"prediction for unlabeled video {record.video_id!r}")
            if not math.isfinite(record.fake_score) or not 0.0 <= record.fake_score <= 1.0:
                raise InputError(
                    f"{record.video_id} frame {record.frame_index}: "
                    f"score {record.fake_score} not in [0, 1]"
                )
        for video_id, label in self.labels.items():
            if label not in (0, 1):
                raise InputError(f"{video_id}: label must be 0 or 1, got {label}")

    def __len__(self) -> int:
        return len(self.records)


def aggregate_video_scores(preds: PredictionSet) -> dict[str, float]:
    """Mean frame score per video; labeled videos without frames are left out"""
    frames: dict[str, list[float]] = defaultdict(list)
    for record in preds.records:
        frames[record.video_id].append(record.fake_score)

    missing = sorted(set(preds.labels) - set(frames))
    if missing:
        logger.warning(
            "%s: %d labeled videos have no frame predictions and are excluded",
            preds.dataset_tag or "predictions",
            len(missing),
        )

    # fsum is exactly rounded, so the mean does not depend on record order
    return {
        video_id: math.fsum(scores) / len(scores) for video_id, scores in sorted(frames.items())
    }


def auroc(scores: Sequence[float], labels: Sequence[int], exact: bool = False) -> float | Fraction:
    """Probability that a random fake outranks a random real, ties counted as half.

    Computed from the Mann-Whitney rank sum with mid-ranks for ties. With
    exact=True the value is returned as a Fraction.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputError(
            f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors"
        )
    if not np.isfinite(scores).all():
        raise InputError("scores must be finite")
    if not np.isin(labels, (0, 1)).all():
        raise InputError("labels must be 0 or 1")

    positives = int((labels == 1).sum())
    negatives = int((labels == 0).sum())
    if positives == 0 or negatives == 0:
        raise UndefinedMetricError("AUROC needs both real and fake samples")

    ranks = rankdata(scores, method="average")
    # mid-ranks are multiples of 1/2, so twice the rank sum is an exact integer
    doubled_rank_sum = int(round(2.0 * ranks[labels == 1].sum()))
    u_statistic = Fraction(doubled_rank_sum, 2) - Fraction(positives * (positives + 1), 2)
    value = u_statistic / (positives * negatives)

    return value if exact else float(value)


def ovr_macro_auroc(score_matrix: np.ndarray, labels: Sequence[int]) -> float:
    """One-vs-rest AUROC averaged over classes, for an N x C score matrix.

    For two classes with rows (1 - p, p) this equals auroc(p, labels).
    """
    score_matrix = np.asarray(score_matrix, dtype=np.float64)
    labels = np.asarray(labels)
    if score_matrix.ndim != 2 or score_matrix.shape[0] != labels.shape[0]:
        raise InputError(
            f"score matrix {score_matrix.shape} does not match {labels.shape[0]} labels"
        )

    classes = range(score_matrix.shape[1])
    per_class = [auroc(score_matrix[:, c], (labels == c).astype(int), exact=True) for c in classes]
    return float(sum(per_class, Fraction(0)) / len(per_class))


def video_level_auroc(preds: PredictionSet, exact: bool = False) -> float | Fraction:
    """Aggregate frames to videos, then AUROC over the videos that have scores"""
    video_scores = aggregate_video_scores(preds)
    ids = list(video_scores)
    return auroc([video_scores[v] for v in ids], [preds.labels[v] for v in ids], exact=exact)
