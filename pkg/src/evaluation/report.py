"""Reports | Video-level AUROC tables, validation-curve figures and dataset statistics"""

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..errors import InputError  # noqa: E402
from ..pipeline.manifests import LABEL_NAMES, VideoManifest  # noqa: E402
from .metrics import PredictionSet, video_level_auroc  # noqa: E402

logger = logging.getLogger(__name__)

DATASET_ORDER = ("CDFv2", "DFD", "DFDC", "FFIW", "DSv1")

SETUP_LABELS = {
    "linear_probe": "Linear Probing",
    "ln": "LN-Tuning",
    "ln_norm": "LN-Tuning + Norm",
    "ln_norm_unal": "LN-Tuning + Norm + UnAl",
    "ln_norm_unal_slerp": "LN-Tuning + Norm + UnAl + Slerp",
    "setup1": "(1) Linear Probing",
    "setup2": "(2) LN-Tuning",
    "setup3": "(3) LN-Tuning + Norm",
    "setup4": "(4) LN-Tuning + Norm + UnAl",
    "setup5": "(5) LN-Tuning + Norm + UnAl + Slerp",
    "setup2_bias": "Bias-Tuning",
    "setup2_lora": "LoRA (rank 1)",
    "setup4_supcon": "LN-Tuning + Norm + SupCon",
    "setup4_uniformity": "LN-Tuning + Norm + Uniformity",
    "toy": "Toy (LN-Tuning + Norm + UnAl + Slerp)",
}

ReportFormat = Literal["table", "plot-data"]

MISSING = "--"


@dataclass
class EvalReport:
    """Video-level AUROC per dataset (percent, two decimals) for one checkpoint"""

    setup_name: str
    checkpoint_id: str
    per_dataset: dict[str, float] = field(default_factory=dict)
    validation_curve: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        for dataset, value in self.per_dataset.items():
            if not 0.0 <= value <= 100.0:
                raise InputError(f"{self.setup_name}/{dataset}: AUROC {value} outside [0, 100]")
        self.validation_curve = [(int(e), float(v)) for e, v in self.validation_curve]

    @property
    def label(self) -> str:
        return SETUP_LABELS.get(self.setup_name, self.setup_name)

    def to_dict(self) -> dict:
        return {
            "setup_name": self.setup_name,
            "label": self.label,
            "checkpoint_id": self.checkpoint_id,
            "per_dataset": dict(self.per_dataset),
            "validation_curve": [list(point) for point in self.validation_curve],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            setup_name=data["setup_name"],
            checkpoint_id=data["checkpoint_id"],
            per_dataset=dict(data.get("per_dataset", {})),
            validation_curve=[tuple(point) for point in data.get("validation_curve", [])],
        )


def percent(value: float) -> float:
    return round(100.0 * float(value), 2)


def build_report(
    setup_name: str,
    checkpoint_id: str,
    prediction_sets: list[PredictionSet],
    validation_curve: Optional[list[tuple[int, float]]] = None,
) -> EvalReport:
    per_dataset = {
        preds.dataset_tag: percent(video_level_auroc(preds)) for preds in prediction_sets
    }
    return EvalReport(setup_name, checkpoint_id, per_dataset, validation_curve or [])


def dataset_columns(reports: list[EvalReport]) -> list[str]:
    """Known datasets in their fixed order, then any others alphabetically"""
    present = {name for report in reports for name in report.per_dataset}
    known = [name for name in DATASET_ORDER if name in present]
    return known + sorted(present - set(DATASET_ORDER))


def render_table(reports: list[EvalReport]) -> str:
    columns = dataset_columns(reports)
    header = ["Setup"] + columns
    rows = [
        [report.label]
        + [
            f"{report.per_dataset[c]:.2f}" if c in report.per_dataset else MISSING
            for c in columns
        ]
        for report in reports
    ]
    return _aligned([header] + rows)


def emit_report(
    reports: list[EvalReport],
    fmt: ReportFormat = "table",
    output_dir: str | Path = ".",
    name: str = "report",
) -> list[Path]:
    """Write the table (text + JSON) or the validation-curve series (JSON + PNG)"""
    if not reports:
        raise InputError("no reports to emit")
    output_dir = Path(output_dir)

    if fmt == "table":
        empty = [report.setup_name for report in reports if not report.per_dataset]
        if empty:
            raise InputError(f"reports without dataset results: {', '.join(empty)}")

        output_dir.mkdir(parents=True, exist_ok=True)
        text_path = output_dir / f"{name}.txt"
        json_path = output_dir / f"{name}.json"
        text_path.write_text(render_table(reports) + "\n")
        json_path.write_text(
            json.dumps(
                {"columns": dataset_columns(reports), "rows": [r.to_dict() for r in reports]},
                indent=2,
            )
        )
        logger.info("Wrote %s and %s", text_path, json_path)
        return [text_path, json_path]

    if fmt == "plot-data":
        series = [r for r in reports if r.validation_curve]
        if not series:
            raise InputError("no report carries a validation curve")

        output_dir.mkdir(parents=True, exist_ok=True)
        json_path = output_dir / f"{name}_curves.json"
        png_path = output_dir / f"{name}_curves.png"
        json_path.write_text(
            json.dumps(
                {
                    "series": [
                        {
                            "setup_name": r.setup_name,
                            "label": r.label,
                            "epochs": [e for e, _ in r.validation_curve],
                            "val_auroc": [v for _, v in r.validation_curve],
                        }
                        for r in series
                    ]
                },
                indent=2,
            )
        )
        _plot_curves(series, png_path)
        logger.info("Wrote %s and %s", json_path, png_path)
        return [json_path, png_path]

    raise InputError(f"unknown report format {fmt!r}")


def dataset_statistics(
    manifests: list[VideoManifest], excluded: Optional[dict[str, dict[str, int]]] = None
) -> str:
    """Real/fake video counts per dataset, excluded videos in parentheses,
    followed by video and frame counts per source tag.
    """
    excluded = excluded or {}
    videos: dict[str, dict[str, int]] = defaultdict(lambda: {"real": 0, "fake": 0})
    sources: dict[tuple[str, str], list[int]] = defaultdict(lambda: [0, 0])

    for manifest in manifests:
        videos[manifest.dataset][manifest.label_name] += 1
        source = "Real" if manifest.label_name == "real" else manifest.method_tag
        sources[(manifest.dataset, source)][0] += 1
        sources[(manifest.dataset, source)][1] += len(manifest.frames)

    datasets = sorted(set(videos) | set(excluded))
    rows = [["Dataset", "Real", "Fake"]]
    for dataset in datasets:
        cells = [dataset]
        for label in LABEL_NAMES.values():
            count = videos[dataset][label] if dataset in videos else 0
            dropped = excluded.get(dataset, {}).get(label, 0)
            cells.append(f"{count} (+{dropped})" if dropped else str(count))
        rows.append(cells)

    source_rows = [["Dataset", "Source", "Videos", "Frames"]]
    for (dataset, source), (count, frames) in sorted(sources.items()):
        source_rows.append([dataset, source, str(count), str(frames)])

    return _aligned(rows) + "\n\n" + _aligned(source_rows)


def _plot_curves(reports: list[EvalReport], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.3))
    for report in reports:
        epochs = [e for e, _ in report.validation_curve]
        values = [100.0 * v for _, v in report.validation_curve]
        ax.plot(epochs, values, marker="o", markersize=3, label=report.label)
    ax.set_xlabel("Epoch")
    ax.set_ylabel("Validation video-level AUROC (%)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _aligned(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for n, row in enumerate(rows):
        lines.append(" | ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
        if n == 0:
            lines.append("-+-".join("-" * width for width in widths))
    return "\n".join(lines)
