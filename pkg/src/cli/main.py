"""Command line | preprocess, train, evaluate, report, plot and inspect subcommands"""

import argparse
import json
import logging
import shutil
import sys
from collections import defaultdict
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import datetime, timezone
from functools import partial
from pathlib import Path
from typing import Optional, Sequence

from ..adapters import apply_adapter
from ..backbone import ENCODER_SPECS, DeepfakeDetector, ImageEncoder
from ..errors import ConfigurationError, InputError, ToolkitError
from ..evaluation import (
    EvalReport,
    RunInfo,
    build_report,
    dataset_statistics,
    emit_report,
    load_prediction_dir,
    predict,
    render_table,
    write_predictions,
    write_run_info,
)
from ..evaluation.predictions import PREDICTIONS_SUFFIX, RUN_FILE
from ..monitoring import MetricsLog
from ..pipeline import (
    DEFAULT_FRAMES,
    ExclusionLedger,
    FrameDataset,
    PreprocessSettings,
    SyntheticFrameDataset,
    build_detector,
    build_loader,
    discover_videos,
    preprocess_videos,
    read_manifests,
    resolve_data_root,
)
from ..pipeline.geometry import DEFAULT_MARGIN, DEFAULT_SIZE
from ..training import (
    Checkpoint,
    build_model,
    build_training_data,
    load_checkpoints,
    load_config,
    restore,
    select_best,
)
from ..training.trainer import CONFIG_FILE, DIAGNOSTIC_FILE, METRICS_FILE, Trainer

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
MANIFEST_FILE = "manifest.jsonl"
EXCLUSIONS_FILE = "exclusions.json"
CHECKPOINT_DIR = "checkpoints"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepfake-peft",
        description="Parameter-efficient deepfake detection on a frozen CLIP vision encoder",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    pre = commands.add_parser("preprocess", help="sample frames, crop faces, write manifests")
    pre.add_argument("--input", required=True, help="directory with real/ and fake/ subfolders")
    pre.add_argument("--output", required=True)
    pre.add_argument("--dataset", help="dataset tag (default: input directory name)")
    pre.add_argument("--split", default="test", choices=["train", "val", "test"])
    pre.add_argument("--frames", type=int, default=DEFAULT_FRAMES)
    pre.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    pre.add_argument("--size", type=int, default=DEFAULT_SIZE)
    pre.add_argument("--workers", type=int, default=None)
    pre.add_argument("--detector", default="dlib", choices=["dlib", "planted"])
    pre.add_argument("--predictor", help="dlib landmark model (default: $DEEPFAKE_DLIB_PREDICTOR)")
    pre.add_argument("--force", action="store_true", help="overwrite existing outputs")
    pre.set_defaults(handler=cmd_preprocess)

    tr = commands.add_parser("train", help="train a preset or config file")
    _config_arguments(tr)
    tr.add_argument("--output", required=True)
    tr.add_argument(
        "--data-root", help="data root for manifest paths (default: $DEEPFAKE_DATA_ROOT)"
    )
    tr.add_argument("--weights", help="encoder weights (default: $DEEPFAKE_WEIGHTS)")
    tr.add_argument("--progress", action="store_true", help="show progress bars")
    tr.add_argument("--force", action="store_true", help="overwrite an existing run")
    tr.set_defaults(handler=cmd_train)

    ev = commands.add_parser("evaluate", help="dump per-frame predictions for a trained run")
    ev.add_argument("--run", required=True, help="training output directory")
    ev.add_argument(
        "--manifests", nargs="*", default=[], help="test manifests (default: synthetic test split)"
    )
    ev.add_argument(
        "--checkpoint", default="best", help="'best' or a checkpoint id such as epoch004"
    )
    ev.add_argument("--output", required=True)
    ev.add_argument("--data-root")
    ev.add_argument("--batch-size", type=int, default=None)
    ev.add_argument("--progress", action="store_true")
    ev.add_argument("--force", action="store_true")
    ev.set_defaults(handler=cmd_evaluate)

    rp = commands.add_parser("report", help="video-level AUROC table from prediction directories")
    rp.add_argument("--predictions", nargs="+", required=True)
    rp.add_argument("--output", required=True)
    rp.add_argument("--name", default="report")
    rp.add_argument("--force", action="store_true")
    rp.set_defaults(handler=cmd_report)

    pl = commands.add_parser("plot", help="validation AUROC curves of training runs")
    pl.add_argument("--runs", nargs="+", required=True)
    pl.add_argument("--output", required=True)
    pl.add_argument("--name", default="validation")
    pl.add_argument("--force", action="store_true")
    pl.set_defaults(handler=cmd_plot)

    ins = commands.add_parser("inspect", help="trainable parameter counts and dataset statistics")
    _config_arguments(ins, required=False)
    ins.add_argument("--manifests", nargs="*", default=[])
    ins.add_argument("--exclusions", help="preprocessing output directory holding exclusions.json")
    ins.set_defaults(handler=cmd_inspect)

    return parser


def _config_arguments(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--config", required=required, help="preset name or YAML path")
    parser.add_argument(
        "--override",
        "--overrides",
        dest="overrides",
        action="extend",
        nargs="+",
        default=[],
        metavar="KEY=VALUE",
        help="dotted config overrides, e.g. seed=7 loss_weights.uniformity=0.2",
    )


def cmd_preprocess(args) -> list[Path]:
    output = Path(args.output)
    manifest_path = output / MANIFEST_FILE
    settings = PreprocessSettings(frames=args.frames, margin=args.margin, size=args.size)
    if _is_complete(output, "preprocess") and not args.force:
        logger.info("%s exists, skipping preprocessing (use --force to redo)", manifest_path)
        return _existing(manifest_path, output / EXCLUSIONS_FILE)
    _clear_stale(output, "preprocess", args.force, manifest_path, output / EXCLUSIONS_FILE)

    dataset = args.dataset or Path(args.input).name
    jobs = discover_videos(args.input, dataset, args.split)
    with _tracked(output, "preprocess"):
        summary = preprocess_videos(
            jobs,
            partial(build_detector, args.detector, args.predictor),
            output,
            manifest_name=MANIFEST_FILE,
            settings=settings,
            workers=args.workers,
        )
    print(f"processed {summary.processed} videos, excluded {summary.excluded}")
    return _existing(manifest_path, output / EXCLUSIONS_FILE)


def cmd_train(args) -> list[Path]:
    output = Path(args.output)
    overrides = list(args.overrides)
    if args.data_root:
        overrides.append(f"data.data_root={args.data_root}")
    if args.weights:
        overrides.append(f"weights={args.weights}")
    cfg = load_config(args.config, overrides)

    if _is_complete(output, "train") and not args.force:
        logger.info("%s already holds a run, skipping (use --force to retrain)", output)
        return _run_artifacts(output)
    _clear_stale(
        output,
        "train",
        args.force,
        output / CHECKPOINT_DIR,
        output / METRICS_FILE,
        output / DIAGNOSTIC_FILE,
    )

    model, report = build_model(cfg)
    print(report.summary())
    data = build_training_data(cfg)
    with _tracked(output, "train"):
        Trainer(cfg, model, data, output, progress=args.progress).train()
    return _run_artifacts(output)


def cmd_evaluate(args) -> list[Path]:
    run_dir, output = Path(args.run), Path(args.output)
    if _is_complete(output, "evaluate") and not args.force:
        logger.info("%s already holds predictions, skipping (use --force to redo)", output)
        return _existing(output / RUN_FILE, *sorted(output.glob(f"*{PREDICTIONS_SUFFIX}")))

    config_path = run_dir / CONFIG_FILE
    if not config_path.is_file():
        raise ConfigurationError(f"{run_dir} has no {CONFIG_FILE}; is it a training output?")
    overrides = [f"data.data_root={args.data_root}"] if args.data_root else []
    cfg = load_config(config_path, overrides)

    model, _ = build_model(cfg)
    checkpoint = _pick_checkpoint(run_dir, args.checkpoint)
    restore(model, checkpoint, model.encoder.fingerprint)
    batch_size = args.batch_size or cfg.batch_size

    _clear_stale(
        output, "evaluate", args.force, output / RUN_FILE, *output.glob(f"*{PREDICTIONS_SUFFIX}")
    )

    written = []
    with _tracked(output, "evaluate"):
        for tag, dataset in _evaluation_sets(cfg, args.manifests):
            loader = build_loader(dataset, batch_size, workers=cfg.workers)
            preds = predict(model, loader, tag, cfg.device, cfg.precision, progress=args.progress)
            written.append(write_predictions(output, preds))
        run = RunInfo(cfg.name, checkpoint.checkpoint_id, cfg.config_hash())
        written.insert(0, write_run_info(output, run))
    return written


def cmd_report(args) -> list[Path]:
    output = Path(args.output)
    outputs = [output / f"{args.name}.txt", output / f"{args.name}.json"]
    if all(path.exists() for path in outputs) and not args.force:
        logger.info("%s exists, skipping (use --force to rebuild)", outputs[0])
        return outputs

    reports = []
    for directory in args.predictions:
        run, prediction_sets = load_prediction_dir(directory)
        reports.append(build_report(run.setup_name, run.checkpoint_id, prediction_sets))

    paths = emit_report(reports, "table", output, name=args.name)
    print(render_table(reports))
    return paths


def cmd_plot(args) -> list[Path]:
    output = Path(args.output)
    outputs = [output / f"{args.name}_curves.json", output / f"{args.name}_curves.png"]
    if all(path.exists() for path in outputs) and not args.force:
        logger.info("%s exists, skipping (use --force to redraw)", outputs[1])
        return outputs

    reports = []
    for directory in map(Path, args.runs):
        metrics_path = directory / METRICS_FILE
        if not metrics_path.is_file():
            raise InputError(f"{directory} has no {METRICS_FILE}")
        config_path = directory / CONFIG_FILE
        name = load_config(config_path).name if config_path.is_file() else directory.name
        log = MetricsLog(metrics_path, resume=True)
        curve = log.validation_curve()
        trend = log.curve_trend()
        if trend is not None:
            logger.info(
                "%s: best val AUROC %.4f at epoch %d, last %.4f (%s)",
                name,
                trend.best,
                trend.best_epoch,
                trend.current,
                trend.trend_direction,
            )
        reports.append(EvalReport(setup_name=name, checkpoint_id="", validation_curve=curve))

    return emit_report(reports, "plot-data", output, name=args.name)


def cmd_inspect(args) -> list[Path]:
    if not args.config and not args.manifests:
        raise ConfigurationError("inspect needs --config and/or --manifests")

    if args.config:
        cfg = load_config(args.config, args.overrides)
        # parameter names and shapes only; no weights are loaded
        skeleton = ImageEncoder.skeleton(ENCODER_SPECS[cfg.encoder])
        detector = DeepfakeDetector(skeleton, normalize=cfg.normalize)
        _, report = apply_adapter(detector, cfg.adapter)
        print(f"{cfg.name} ({cfg.adapter.strategy.value} on {cfg.encoder}) {report.summary()}")

    if args.manifests:
        manifests = [m for path in args.manifests for m in read_manifests(path)]
        excluded = ExclusionLedger(Path(args.exclusions)).counts() if args.exclusions else {}
        print(dataset_statistics(manifests, excluded))
    return []


def _pick_checkpoint(run_dir: Path, checkpoint_id: str) -> Checkpoint:
    checkpoints = load_checkpoints(run_dir)
    if not checkpoints:
        raise ConfigurationError(f"no checkpoints under {run_dir / CHECKPOINT_DIR}")
    if checkpoint_id == "best":
        return select_best(checkpoints)
    for checkpoint in checkpoints:
        if checkpoint.checkpoint_id == checkpoint_id:
            return checkpoint
    available = ", ".join(c.checkpoint_id for c in checkpoints)
    raise ConfigurationError(
        f"no checkpoint {checkpoint_id!r} in {run_dir}; available: {available}"
    )


def _evaluation_sets(cfg, manifest_files: Sequence[str]):
    """(dataset tag, dataset) pairs: one per dataset across the manifest files"""
    if not manifest_files:
        if cfg.data.synthetic is None:
            raise ConfigurationError("no --manifests given and the run has no synthetic data")
        yield cfg.data.synthetic.dataset, SyntheticFrameDataset(cfg.data.synthetic, "test")
        return

    grouped = defaultdict(list)
    roots = {}
    for manifest_file in manifest_files:
        root = resolve_data_root(manifest_file, cfg.data.data_root)
        for manifest in read_manifests(manifest_file):
            grouped[manifest.dataset].append(manifest)
            if roots.setdefault(manifest.dataset, root) != root:
                raise ConfigurationError(f"dataset {manifest.dataset} spans several data roots")

    for tag in sorted(grouped):
        yield tag, FrameDataset(grouped[tag], roots[tag])


def _run_artifacts(output: Path) -> list[Path]:
    return _existing(
        output / CONFIG_FILE,
        output / METRICS_FILE,
        *sorted((output / CHECKPOINT_DIR).glob("epoch_*.pt")),
    )


def _existing(*paths: Path) -> list[Path]:
    return [path for path in paths if path.exists()]


def marker_path(output: Path, command: str, state: str) -> Path:
    """<output>/<command>.<state>.json, state is 'complete' or 'failed'"""
    return output / f"{command}.{state}.json"


def _is_complete(output: Path, command: str) -> bool:
    return marker_path(output, command, "complete").is_file()


@contextmanager
def _tracked(output: Path, command: str) -> Iterator[None]:
    """Mark the outputs of a command complete on success, failed when the body raises"""
    output.mkdir(parents=True, exist_ok=True)
    complete = marker_path(output, command, "complete")
    failed = marker_path(output, command, "failed")
    complete.unlink(missing_ok=True)
    failed.unlink(missing_ok=True)
    try:
        yield
    except Exception as exc:
        _write_marker(failed, command, error=f"{type(exc).__name__}: {exc}")
        logger.error("%s failed; outputs in %s are partial (%s)", command, output, failed.name)
        raise
    _write_marker(complete, command)


def _write_marker(path: Path, command: str, error: Optional[str] = None) -> None:
    record = {"command": command, "finished_at": datetime.now(timezone.utc).isoformat()}
    if error is not None:
        record["error"] = error
    path.write_text(json.dumps(record, indent=2) + "\n")


def _clear_stale(output: Path, command: str, force: bool, *paths: Path) -> None:
    """Remove outputs left by an earlier run that never reached its completion marker"""
    stale = [path for path in paths if path.exists()]
    if stale and not force:
        logger.warning(
            "%s holds incomplete %s outputs (no %s), redoing",
            output,
            command,
            marker_path(output, command, "complete").name,
        )
    for path in stale:
        if path.is_dir():
            shutil.rmtree(path)
        else:
            path.unlink()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format=LOG_FORMAT,
        force=True,
    )

    try:
        artifacts = args.handler(args)
    except (ConfigurationError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for path in artifacts:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
