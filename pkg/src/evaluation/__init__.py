"""Evaluation | Video-level AUROC, prediction dumps, inference and reports"""

from .metrics import (
    PredictionRecord,
    PredictionSet,
    aggregate_video_scores,
    auroc,
    ovr_macro_auroc,
    video_level_auroc,
)
from .predictions import (
    RunInfo,
    write_predictions,
    read_predictions,
    load_prediction_dir,
    write_run_info,
)
from .inference import predict, autocast_context
from .report import (
    EvalReport,
    DATASET_ORDER,
    SETUP_LABELS,
    build_report,
    emit_report,
    render_table,
    dataset_statistics,
    percent,
)

__all__ = [
    "PredictionRecord",
    "PredictionSet",
    "aggregate_video_scores",
    "auroc",
    "ovr_macro_auroc",
    "video_level_auroc",
    "RunInfo",
    "write_predictions",
    "read_predictions",
    "load_prediction_dir",
    "write_run_info",
    "predict",
    "autocast_context",
    "EvalReport",
    "DATASET_ORDER",
    "SETUP_LABELS",
    "build_report",
    "emit_report",
    "render_table",
    "dataset_statistics",
    "percent",
]
