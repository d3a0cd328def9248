"""Trainer | Adam with cosine decay, latent slerp, composite loss and per-epoch validation"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import torch
from torch.utils.data import Dataset
from tqdm import tqdm

from ..adapters import TrainabilityReport, apply_adapter
from ..backbone import ENCODER_SPECS, DeepfakeDetector, ImageEncoder
from ..errors import ConfigurationError, TrainingDivergedError, UndefinedMetricError
from ..evaluation import (
    PredictionRecord,
    PredictionSet,
    autocast_context,
    predict,
    video_level_auroc,
)
from ..losses import LossBreakdown, composite
from ..manifold import FeatureBatch, fake_probability, slerp_augment_batch
from ..monitoring import HostMonitor, MetricsLog
from ..pipeline import (
    FrameDataset,
    SyntheticFrameDataset,
    build_loader,
    build_split,
    read_manifests,
    resolve_data_root,
)
from .checkpoint import Checkpoint, checkpoint_path
from .config import TrainConfig
from .schedule import lr_at, set_lr

logger = logging.getLogger(__name__)

DIAGNOSTIC_FILE = "diagnostic.pt"
METRICS_FILE = "metrics.jsonl"
CONFIG_FILE = "config.yaml"


@dataclass
class TrainingData:
    train: Dataset
    val: Optional[Dataset] = None


def build_model(cfg: TrainConfig) -> tuple[DeepfakeDetector, TrainabilityReport]:
    """Encoder, head and adapter for a config; head init is seeded by cfg.seed"""
    encoder = ImageEncoder.from_spec(
        ENCODER_SPECS[cfg.encoder], weights=cfg.weights, device=cfg.device
    )
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed)
        detector = DeepfakeDetector(encoder, normalize=cfg.normalize)
    _, report = apply_adapter(detector, cfg.adapter)
    return detector, report


def build_training_data(cfg: TrainConfig) -> TrainingData:
    """Synthetic frames when configured, else the train/val splits of the manifests"""
    if cfg.data.synthetic is not None:
        return TrainingData(
            train=SyntheticFrameDataset(
                cfg.data.synthetic, "train", train=True, augmentation=cfg.augmentation
            ),
            val=SyntheticFrameDataset(cfg.data.synthetic, "val"),
        )

    if not cfg.data.manifests:
        raise ConfigurationError("no training data: set data.manifests or data.synthetic")

    manifests, roots = [], {}
    for manifest_file in cfg.data.manifests:
        loaded = read_manifests(manifest_file)
        root = resolve_data_root(manifest_file, cfg.data.data_root)
        manifests.extend(loaded)
        roots.update({m.video_id: root for m in loaded})

    train, val, _ = build_split(manifests, cfg.data.split)
    train_root = {roots[m.video_id] for m in train}
    if len(train_root) > 1 or len({roots[m.video_id] for m in val}) > 1:
        raise ConfigurationError(
            "manifests in one split must share a data root; set data.data_root"
        )

    return TrainingData(
        train=FrameDataset(
            train,
            next(iter(train_root), Path(".")),
            train=True,
            augmentation=cfg.augmentation,
            seed=cfg.seed,
        ),
        val=FrameDataset(val, roots[val[0].video_id]) if val else None,
    )


class Trainer:
    """Optimization loop for one config; writes checkpoints and the metrics log to output_dir"""

    def __init__(
        self,
        cfg: TrainConfig,
        model: DeepfakeDetector,
        data: TrainingData,
        output_dir: str | Path,
        progress: bool = False,
    ):
        if len(data.train) == 0:
            raise ConfigurationError("training split is empty")

        self.cfg = cfg
        self.model = model
        self.data = data
        self.output_dir = Path(output_dir)
        self.progress = progress
        self.device = torch.device(cfg.device)

        self.params = [p for p in model.parameters() if p.requires_grad]
        if not self.params:
            raise ConfigurationError("model has no trainable parameters")
        self.optimizer = torch.optim.Adam(
            self.params, lr=cfg.lr_initial, betas=cfg.betas, weight_decay=cfg.weight_decay
        )
        self.slerp_generator = torch.Generator().manual_seed(cfg.seed + 1)

        self.steps_per_epoch = math.ceil(len(data.train) / cfg.batch_size)
        self.schedule_steps = cfg.decay_epochs * self.steps_per_epoch
        self.total_steps = cfg.epochs * self.steps_per_epoch
        if cfg.max_steps is not None:
            self.total_steps = min(self.total_steps, cfg.max_steps)

        self.step = 0
        self.metrics = MetricsLog(self.output_dir / METRICS_FILE)
        self.monitor = HostMonitor()

    def train(self) -> list[Checkpoint]:
        """Run until the epoch budget, max_steps or early-stopping patience runs out"""
        cfg = self.cfg
        cfg.save(self.output_dir / CONFIG_FILE)
        logger.info(
            "Training %s: %d steps (%d per epoch), schedule over %d",
            cfg.name,
            self.total_steps,
            self.steps_per_epoch,
            self.schedule_steps,
        )

        checkpoints: list[Checkpoint] = []
        best_auroc, stale = float("-inf"), 0

        for epoch in range(cfg.epochs):
            if self.step >= self.total_steps:
                break

            train_scores = self._train_epoch(epoch)
            train_auroc = _safe_auroc(train_scores, "train")

            val_auroc = None
            validated = (
                (epoch + 1) % cfg.validate_every == 0
                or epoch == cfg.epochs - 1
                or self.step >= self.total_steps
            )
            if validated:
                val_auroc = self.validate()
                checkpoint = Checkpoint(
                    trainable_state=self.model.trainable_state(),
                    epoch=epoch,
                    val_auroc=val_auroc,
                    config_hash=cfg.config_hash(),
                    weights_fingerprint=self.model.encoder.fingerprint,
                    step=self.step,
                )
                checkpoint.save(checkpoint_path(self.output_dir, epoch))
                checkpoints.append(checkpoint)

            self.metrics.log_epoch(
                epoch,
                step=self.step,
                train_auroc=train_auroc,
                val_auroc=val_auroc,
                checkpoint=checkpoints[-1].path.name if validated else None,
            )
            self.monitor.log_snapshot(f"epoch {epoch}")
            logger.info(
                "epoch %d: train AUROC %s, val AUROC %s", epoch, _fmt(train_auroc), _fmt(val_auroc)
            )

            if val_auroc is not None and cfg.early_stopping_patience is not None:
                if val_auroc > best_auroc:
                    best_auroc, stale = val_auroc, 0
                else:
                    stale += 1
                    if stale >= cfg.early_stopping_patience:
                        logger.info(
                            "Early stopping after epoch %d (best val AUROC %.4f)", epoch, best_auroc
                        )
                        break

        return checkpoints

    def train_step(
        self, images: torch.Tensor, labels: torch.Tensor, video_ids: list[str], epoch: int
    ) -> tuple[LossBreakdown, torch.Tensor]:
        """One optimizer step; returns the loss breakdown and the un-augmented fake scores"""
        cfg = self.cfg
        set_lr(self.optimizer, lr_at(self.step, self.schedule_steps, cfg))
        labels = labels.to(self.device)

        with autocast_context(self.device, cfg.precision):
            features = self.model.features(images.to(self.device))
        batch = FeatureBatch(features.float(), labels, list(video_ids), normalized=cfg.normalize)
        scores = fake_probability(self.model.classify(batch.features).detach())

        draw = float(torch.rand(1, generator=self.slerp_generator)) if cfg.slerp else 1.0
        if cfg.slerp and draw < cfg.slerp_probability:
            batch = slerp_augment_batch(batch, self.slerp_generator, mode=cfg.slerp_mode)

        logits = self.model.classify(batch.features)
        breakdown = composite(logits.float(), batch.features, batch.labels, cfg.loss_weights)

        if not torch.isfinite(breakdown.total):
            path = self._write_diagnostic(epoch, breakdown)
            raise TrainingDivergedError(
                f"non-finite loss at step {self.step}; diagnostic written to {path}"
            )

        self.optimizer.zero_grad(set_to_none=True)
        breakdown.total.backward()
        self.optimizer.step()
        return breakdown, scores

    @torch.no_grad()
    def validate(self) -> Optional[float]:
        if self.data.val is None or len(self.data.val) == 0:
            logger.warning("No validation data, skipping validation")
            return None
        loader = build_loader(self.data.val, self.cfg.batch_size, workers=self.cfg.workers)
        preds = predict(
            self.model, loader, "val", self.device, self.cfg.precision, progress=self.progress
        )
        return _safe_auroc(preds, "validation")

    def _train_epoch(self, epoch: int) -> PredictionSet:
        cfg = self.cfg
        if hasattr(self.data.train, "set_epoch"):
            self.data.train.set_epoch(epoch)
        loader = build_loader(
            self.data.train,
            cfg.batch_size,
            shuffle=True,
            seed=cfg.seed + epoch,
            workers=cfg.workers,
        )

        self.model.train()
        records, labels = [], {}
        for images, batch_labels, video_ids, frame_indices in tqdm(
            loader, desc=f"epoch {epoch}", disable=not self.progress
        ):
            if self.step >= self.total_steps:
                break
            breakdown, scores = self.train_step(images, batch_labels, video_ids, epoch)
            lr = self.optimizer.param_groups[0]["lr"]
            self.metrics.log_step(self.step, epoch, lr, breakdown.as_record())
            self.step += 1

            for video_id, label, frame_index, score in zip(
                video_ids, batch_labels.tolist(), frame_indices.tolist(), scores.cpu().tolist()
            ):
                records.append(PredictionRecord(video_id, int(frame_index), float(score)))
                labels[video_id] = int(label)

        self.model.eval()
        return PredictionSet(records=records, labels=labels, dataset_tag="train")

    def _write_diagnostic(self, epoch: int, breakdown: LossBreakdown) -> Path:
        path = self.output_dir / DIAGNOSTIC_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "step": self.step,
                "epoch": epoch,
                "trainable_state": self.model.trainable_state(),
                "losses": {
                    name: float(value.detach()) for name, value in breakdown.per_term.items()
                },
            },
            path,
        )
        logger.error("Loss diverged at step %d, diagnostic snapshot at %s", self.step, path)
        return path


def train(
    cfg: TrainConfig,
    data: TrainingData,
    model: DeepfakeDetector,
    output_dir: str | Path,
    progress: bool = False,
) -> list[Checkpoint]:
    return Trainer(cfg, model, data, output_dir, progress=progress).train()


def _safe_auroc(preds: PredictionSet, what: str) -> Optional[float]:
    if not preds.records:
        return None
    try:
        return float(video_level_auroc(preds))
    except UndefinedMetricError as exc:
        logger.warning("%s AUROC undefined: %s", what, exc)
        return None


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"
