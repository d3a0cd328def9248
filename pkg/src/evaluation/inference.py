"""Inference | Per-frame fake scores from a detector over a frame loader"""

import logging
from contextlib import nullcontext

import torch
from torch.utils.data import DataLoader
from tqdm import tqdm

from ..backbone import DeepfakeDetector
from .metrics import PredictionRecord, PredictionSet

logger = logging.getLogger(__name__)


def autocast_context(device: str | torch.device, precision: str):
    """bfloat16 autocast for reduced precision; parameters stay in float32"""
    if precision == "reduced":
        return torch.autocast(device_type=torch.device(device).type, dtype=torch.bfloat16)
    return nullcontext()


@torch.no_grad()
def predict(
    detector: DeepfakeDetector,
    loader: DataLoader,
    dataset_tag: str,
    device: str | torch.device = "cpu",
    precision: str = "full",
    progress: bool = True,
) -> PredictionSet:
    """Score every frame the loader yields; labels come from the loader too"""
    was_training = detector.training
    detector.eval()

    records, labels = [], {}
    try:
        for images, batch_labels, video_ids, frame_indices in tqdm(
            loader, desc=f"predict {dataset_tag}", disable=not progress
        ):
            with autocast_context(device, precision):
                scores = detector.predict(images.to(device))
            for video_id, label, frame_index, score in zip(
                video_ids, batch_labels.tolist(), frame_indices.tolist(), scores.cpu().tolist()
            ):
                records.append(PredictionRecord(video_id, int(frame_index), float(score)))
                labels[video_id] = int(label)
    finally:
        detector.train(was_training)

    logger.info("%s: scored %d frames of %d videos", dataset_tag, len(records), len(labels))
    return PredictionSet(records=records, labels=labels, dataset_tag=dataset_tag)
