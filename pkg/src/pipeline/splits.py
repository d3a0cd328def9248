"""Splits | Deterministic train/val/test assembly with a held-out slice of the test set"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError, IntegrityError
from .manifests import VideoManifest

logger = logging.getLogger(__name__)


@dataclass
class SplitSpec:
    """Seed and per-dataset fraction of test videos moved into validation"""

    seed: int = 0
    val_fraction: float = 0.15
    per_source: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for source, fraction in [("default", self.val_fraction), *self.per_source.items()]:
            if not 0.0 <= fraction <= 1.0:
                raise ConfigurationError(
                    f"validation fraction for {source} must be in [0, 1], got {fraction}"
                )

    def fraction_for(self, dataset: str) -> float:
        return self.per_source.get(dataset, self.val_fraction)


def build_split(
    manifests: list[VideoManifest], spec: SplitSpec
) -> tuple[list[VideoManifest], list[VideoManifest], list[VideoManifest]]:
    """(train, val, test) lists; validation takes round(f * n) test videos per dataset.

    Manifests already marked train or val keep their split. Selection depends
    only on the seed and the sorted video ids.
    """
    _check_unique(manifests)

    train = [m for m in manifests if m.split == "train"]
    val = [m for m in manifests if m.split == "val"]
    test_by_dataset: dict[str, list[VideoManifest]] = {}
    for manifest in manifests:
        if manifest.split == "test":
            test_by_dataset.setdefault(manifest.dataset, []).append(manifest)

    rng = np.random.default_rng(spec.seed)
    test = []
    for dataset in sorted(test_by_dataset):
        group = sorted(test_by_dataset[dataset], key=lambda m: m.video_id)
        n_val = round(spec.fraction_for(dataset) * len(group))
        order = rng.permutation(len(group))
        chosen = set(order[:n_val].tolist())

        for position, manifest in enumerate(group):
            if position in chosen:
                val.append(replace(manifest, split="val"))
            else:
                test.append(manifest)
        logger.debug("%s: %d of %d test videos moved to validation", dataset, n_val, len(group))

    _check_disjoint(train, val, test)
    return train, val, test


def _check_unique(manifests: list[VideoManifest]) -> None:
    seen = set()
    for manifest in manifests:
        if manifest.video_id in seen:
            raise IntegrityError(f"duplicate video id {manifest.video_id!r} across manifests")
        seen.add(manifest.video_id)


def _check_disjoint(*splits: list[VideoManifest]) -> None:
    ids = [{m.video_id for m in split} for split in splits]
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            overlap = ids[i] & ids[j]
            if overlap:
                raise IntegrityError(f"video ids in two splits: {sorted(overlap)[:5]}")
