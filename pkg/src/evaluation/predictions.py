"""Prediction dumps | Line-delimited per-frame scores plus run metadata"""

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

from ..errors import InputError
from .metrics import PredictionRecord, PredictionSet

PREDICTIONS_SUFFIX = ".predictions.jsonl"
RUN_FILE = "run.json"


@dataclass
class RunInfo:
    """Which model produced a directory of prediction dumps"""

    setup_name: str
    checkpoint_id: str
    config_hash: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def write_predictions(output_dir: str | Path, preds: PredictionSet) -> Path:
    """<output_dir>/<dataset>.predictions.jsonl, one frame per line"""
    if not preds.dataset_tag:
        raise InputError("prediction set needs a dataset tag to be written")

    path = Path(output_dir) / f"{preds.dataset_tag}{PREDICTIONS_SUFFIX}"
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as f:
        for record in preds.records:
            row = {
                "video_id": record.video_id,
                "frame_index": record.frame_index,
                "fake_score": record.fake_score,
                "label": preds.labels[record.video_id],
                "dataset": preds.dataset_tag,
            }
            f.write(json.dumps(row) + "\n")
    os.replace(tmp, path)
    return path


def read_predictions(path: str | Path) -> PredictionSet:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"prediction dump not found: {path}")

    records, labels, dataset_tag = [], {}, path.name.removesuffix(PREDICTIONS_SUFFIX)
    with open(path) as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                records.append(
                    PredictionRecord(
                        row["video_id"], int(row["frame_index"]), float(row["fake_score"])
                    )
                )
                labels[row["video_id"]] = int(row["label"])
                dataset_tag = row.get("dataset", dataset_tag)
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise InputError(f"{path}:{line_number}: malformed prediction ({exc})") from exc

    return PredictionSet(records=records, labels=labels, dataset_tag=dataset_tag)


def load_prediction_dir(directory: str | Path) -> tuple[RunInfo, list[PredictionSet]]:
    """Run metadata and every prediction dump in a directory, sorted by dataset"""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"prediction directory not found: {directory}")

    dumps = sorted(directory.glob(f"*{PREDICTIONS_SUFFIX}"))
    if not dumps:
        raise InputError(f"no prediction dumps in {directory}")

    run_file = directory / RUN_FILE
    if run_file.is_file():
        run = RunInfo(**json.loads(run_file.read_text()))
    else:
        run = RunInfo(setup_name=directory.name, checkpoint_id="unknown")
    return run, [read_predictions(path) for path in dumps]


def write_run_info(output_dir: str | Path, run: RunInfo) -> Path:
    path = Path(output_dir) / RUN_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(run.to_dict(), indent=2))
    return path
