"""Exclusion ledger | Videos dropped by preprocessing, with reasons and per-dataset counts"""

import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

logger = logging.getLogger(__name__)


@dataclass
class Exclusion:
    """Video that produced no usable face crops"""

    video_id: str
    dataset: str
    label: str
    reason: str
    frames_attempted: int = 0


class ExclusionLedger:
    """Persisted record of excluded videos, deduplicated by video id"""

    def __init__(self, data_dir: Optional[Path] = None):
        self.data_dir = Path(data_dir) if data_dir else Path("./data/preprocessed")
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.ledger_file = self.data_dir / "exclusions.json"
        self.exclusions: list[Exclusion] = []
        self._load()

    def record(
        self,
        video_id: str,
        dataset: str,
        label: str,
        reason: str,
        frames_attempted: int = 0,
    ) -> Exclusion:
        """Add an exclusion unless the video is already listed"""
        existing = self.get(video_id)
        if existing is not None:
            return existing

        exclusion = Exclusion(
            video_id=video_id,
            dataset=dataset,
            label=label,
            reason=reason,
            frames_attempted=frames_attempted,
        )
        self.exclusions.append(exclusion)
        self._persist()
        logger.warning("Excluded %s/%s: %s", dataset, video_id, reason)
        return exclusion

    def get(self, video_id: str) -> Optional[Exclusion]:
        return next((e for e in self.exclusions if e.video_id == video_id), None)

    def counts(self) -> dict[str, dict[str, int]]:
        """dataset -> {"real": n, "fake": n} excluded videos"""
        counts: dict[str, dict[str, int]] = defaultdict(lambda: {"real": 0, "fake": 0})
        for exclusion in self.exclusions:
            counts[exclusion.dataset][exclusion.label] += 1
        return dict(counts)

    def __len__(self) -> int:
        return len(self.exclusions)

    def _persist(self) -> None:
        data = {"exclusions": [asdict(e) for e in self.exclusions]}
        try:
            with open(self.ledger_file, "w") as f:
                json.dump(data, f, indent=2)
        except OSError as exc:
            logger.error("Could not write exclusion ledger %s: %s", self.ledger_file, exc)

    def _load(self) -> None:
        if not self.ledger_file.exists():
            return
        try:
            with open(self.ledger_file) as f:
                data = json.load(f)
            self.exclusions = [Exclusion(**e) for e in data.get("exclusions", [])]
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            logger.error("Ignoring unreadable exclusion ledger %s: %s", self.ledger_file, exc)
