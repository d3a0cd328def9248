"""Metrics log | Per-step and per-epoch training records as JSONL, with curve analysis"""

import json
import logging
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

logger = logging.getLogger(__name__)

STEP = "step"
EPOCH = "epoch"


@dataclass
class CurveTrend:
    """Summary of a validation curve"""

    current: float
    best: float
    best_epoch: int
    average: float
    trend_direction: str
    slope: float
    data_points: int


class MetricsLog:
    """Append-only JSONL log of training records.

    Records carry no wall-clock timestamps, so runs with the same seed write
    identical files.
    """

    def __init__(self, path: str | Path, resume: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not resume:
            self.path.write_text("")

    def log_step(self, step: int, epoch: int, lr: float, losses: dict[str, float]) -> dict:
        record = {"kind": STEP, "step": step, "epoch": epoch, "lr": lr}
        record.update(losses)
        return self._append(record)

    def log_epoch(self, epoch: int, **fields) -> dict:
        record = {"kind": EPOCH, "epoch": epoch}
        record.update(fields)
        return self._append(record)

    def records(self, kind: Optional[str] = None) -> list[dict]:
        if not self.path.exists():
            return []
        with open(self.path) as f:
            rows = [json.loads(line) for line in f if line.strip()]
        return [r for r in rows if kind is None or r.get("kind") == kind]

    def validation_curve(self) -> list[tuple[int, float]]:
        """(epoch, val_auroc) for every epoch that was validated"""
        return [
            (int(r["epoch"]), float(r["val_auroc"]))
            for r in self.records(EPOCH)
            if r.get("val_auroc") is not None
        ]

    def curve_trend(self) -> Optional[CurveTrend]:
        curve = self.validation_curve()
        if not curve:
            return None

        epochs = [epoch for epoch, _ in curve]
        values = [value for _, value in curve]
        best_index = max(range(len(values)), key=lambda i: (values[i], -epochs[i]))
        slope = _linear_regression_slope(values)

        direction = "increasing" if slope > 1e-3 else "decreasing" if slope < -1e-3 else "stable"

        return CurveTrend(
            current=values[-1],
            best=values[best_index],
            best_epoch=epochs[best_index],
            average=statistics.mean(values),
            trend_direction=direction,
            slope=slope,
            data_points=len(values),
        )

    def _append(self, record: dict) -> dict:
        with open(self.path, "a") as f:
            f.write(json.dumps(_finite(record), sort_keys=True) + "\n")
        return record


def _finite(record: dict) -> dict:
    """JSON has no NaN; non-finite floats are written as strings"""
    return {
        key: (str(value) if isinstance(value, float) and not math.isfinite(value) else value)
        for key, value in record.items()
    }


def _linear_regression_slope(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0

    n = len(values)
    x_mean = (n - 1) / 2.0
    y_mean = statistics.mean(values)

    numerator = sum((i - x_mean) * (values[i] - y_mean) for i in range(n))
    denominator = sum((i - x_mean) ** 2 for i in range(n))

    return numerator / denominator if denominator else 0.0
