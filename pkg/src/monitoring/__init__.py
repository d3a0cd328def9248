"""Monitoring utilities | Host resource snapshots and the training metrics log"""

from .metrics_log import MetricsLog, CurveTrend
from .system_monitor import HostMonitor, HostSnapshot, default_worker_count

__all__ = ["MetricsLog", "CurveTrend", "HostMonitor", "HostSnapshot", "default_worker_count"]
