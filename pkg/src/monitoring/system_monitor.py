"""Host monitor | Process and host resource snapshots with psutil"""

import logging
import os
from dataclasses import asdict, dataclass
from typing import Optional

try:
    import psutil

    PSUTIL_AVAILABLE = True
except ImportError:
    PSUTIL_AVAILABLE = False

logger = logging.getLogger(__name__)

GB = 1024**3


@dataclass
class HostSnapshot:
    """Resource usage of this process and the host at one moment"""

    process_rss_gb: float
    memory_percent: float
    memory_available_gb: float
    cpu_percent: float
    cpu_count: int
    load_avg_1m: float
    accelerator_peak_gb: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def summary(self) -> str:
        text = (
            f"rss {self.process_rss_gb:.2f} GB | host mem {self.memory_percent:.1f}% "
            f"({self.memory_available_gb:.1f} GB free) | cpu {self.cpu_percent:.1f}% "
            f"x{self.cpu_count} | load {self.load_avg_1m:.2f}"
        )
        if self.accelerator_peak_gb is not None:
            text += f" | accelerator peak {self.accelerator_peak_gb:.2f} GB"
        return text


class HostMonitor:
    """Collect host snapshots for training and preprocessing logs"""

    def __init__(self):
        if not PSUTIL_AVAILABLE:
            raise ImportError("psutil required: pip install psutil")
        self._process = psutil.Process()

    def snapshot(self) -> HostSnapshot:
        memory = psutil.virtual_memory()
        load_avg = psutil.getloadavg() if hasattr(psutil, "getloadavg") else (0.0, 0.0, 0.0)

        return HostSnapshot(
            process_rss_gb=self._process.memory_info().rss / GB,
            memory_percent=memory.percent,
            memory_available_gb=memory.available / GB,
            cpu_percent=psutil.cpu_percent(interval=None),
            cpu_count=psutil.cpu_count(logical=False) or 1,
            load_avg_1m=load_avg[0],
            accelerator_peak_gb=_accelerator_peak_gb(),
        )

    def check_thresholds(self, snapshot: HostSnapshot) -> list[dict]:
        """Warnings for memory pressure and an overloaded host"""
        warnings = []

        if snapshot.memory_percent > 90:
            warnings.append({
                "metric": "memory",
                "severity": "critical",
                "value": snapshot.memory_percent,
                "threshold": 90.0,
                "message": f"Host memory at {snapshot.memory_percent:.1f}% "
                f"({snapshot.memory_available_gb:.1f} GB free)",
            })
        elif snapshot.memory_percent > 80:
            warnings.append({
                "metric": "memory",
                "severity": "high",
                "value": snapshot.memory_percent,
                "threshold": 80.0,
                "message": f"Host memory at {snapshot.memory_percent:.1f}%",
            })

        if snapshot.load_avg_1m > snapshot.cpu_count * 2:
            warnings.append({
                "metric": "load",
                "severity": "high",
                "value": snapshot.load_avg_1m,
                "threshold": snapshot.cpu_count * 2,
                "message": (
                    f"Load average {snapshot.load_avg_1m:.2f} (>{snapshot.cpu_count * 2} cores)"
                ),
            })

        return warnings

    def log_snapshot(self, context: str) -> HostSnapshot:
        """Take a snapshot and write it, plus any threshold warnings, to the log"""
        snapshot = self.snapshot()
        logger.info("%s: %s", context, snapshot.summary())
        for warning in self.check_thresholds(snapshot):
            logger.warning("%s: %s", context, warning["message"])
        return snapshot


def default_worker_count() -> int:
    """Physical core count, used as the default preprocessing pool size"""
    if PSUTIL_AVAILABLE:
        return psutil.cpu_count(logical=False) or os.cpu_count() or 1
    return os.cpu_count() or 1


def _accelerator_peak_gb() -> Optional[float]:
    try:
        import torch
    except ImportError:
        return None
    if not torch.cuda.is_available():
        return None
    return torch.cuda.max_memory_allocated() / GB
