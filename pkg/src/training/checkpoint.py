"""Checkpoints | Trainable-only snapshots, atomic saves and best-epoch selection"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import torch
import torch.nn as nn

from ..errors import ConfigurationError, InputError

logger = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    """Trainable tensors of one epoch; the frozen encoder is referenced by fingerprint"""

    trainable_state: dict[str, torch.Tensor]
    epoch: int
    val_auroc: Optional[float]
    config_hash: str
    weights_fingerprint: str
    step: int = 0
    path: Optional[Path] = field(default=None, compare=False)

    @property
    def checkpoint_id(self) -> str:
        return f"epoch{self.epoch:03d}"

    def save(self, path: str | Path) -> Path:
        """Write to a temporary file in the same directory, then rename into place"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        torch.save(
            {
                "trainable_state": self.trainable_state,
                "epoch": self.epoch,
                "val_auroc": self.val_auroc,
                "config_hash": self.config_hash,
                "weights_fingerprint": self.weights_fingerprint,
                "step": self.step,
            },
            tmp,
        )
        os.replace(tmp, path)
        self.path = path
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"checkpoint not found: {path}")
        payload = torch.load(path, map_location="cpu", weights_only=True)
        return cls(path=path, **payload)


def restore(model: nn.Module, checkpoint: Checkpoint, fingerprint: Optional[str] = None) -> None:
    """Load a checkpoint's tensors into a model whose adapter is already applied"""
    if fingerprint is not None and fingerprint != checkpoint.weights_fingerprint:
        raise ConfigurationError(
            f"checkpoint was trained on encoder {checkpoint.weights_fingerprint}, "
            f"model has {fingerprint}"
        )

    names = {name for name, _ in model.named_parameters()}
    missing = sorted(set(checkpoint.trainable_state) - names)
    if missing:
        raise ConfigurationError(f"checkpoint tensors not in model: {', '.join(missing[:5])}")

    model.load_state_dict(checkpoint.trainable_state, strict=False)
    logger.info(
        "Restored %s (%d tensors)", checkpoint.checkpoint_id, len(checkpoint.trainable_state)
    )


def select_best(checkpoints: list[Checkpoint]) -> Checkpoint:
    """Highest validation AUROC; ties go to the earlier epoch"""
    if not checkpoints:
        raise InputError("no checkpoints to select from")
    return max(
        checkpoints,
        key=lambda c: (c.val_auroc if c.val_auroc is not None else float("-inf"), -c.epoch),
    )


def checkpoint_path(output_dir: str | Path, epoch: int) -> Path:
    return Path(output_dir) / "checkpoints" / f"epoch_{epoch:03d}.pt"


def load_checkpoints(output_dir: str | Path) -> list[Checkpoint]:
    directory = Path(output_dir) / "checkpoints"
    return [Checkpoint.load(path) for path in sorted(directory.glob("epoch_*.pt"))]
