"""Tests for the training loop on the toy encoder and synthetic frames"""

import pytest
import torch
from src.errors import ConfigurationError, TrainingDivergedError
from src.evaluation import build_report, emit_report, predict
from src.losses import LossBreakdown
from src.monitoring import MetricsLog
from src.pipeline import SyntheticFrameDataset, build_loader
from src.training import Trainer, TrainingData, build_model, build_training_data, load_config, train
from src.training.trainer import DIAGNOSTIC_FILE, METRICS_FILE

SMALL = [
    "epochs=2",
    "decay_epochs=2",
    "batch_size=16",
    "data.synthetic.videos_per_class=4",
    "data.synthetic.val_videos_per_class=2",
    "data.synthetic.test_videos_per_class=2",
    "data.synthetic.frames_per_video=4",
]

TOY_DATA = (
    "data.synthetic={videos_per_class: 4, val_videos_per_class: 2, "
    "test_videos_per_class: 2, frames_per_video: 4}"
)


def _frozen_checksums(model):
    return {
        name: float(p.detach().double().sum())
        for name, p in model.named_parameters()
        if not p.requires_grad
    }


def _run(tmp_path, overrides=(), name="run"):
    cfg = load_config("toy", [*SMALL, *overrides])
    model, _ = build_model(cfg)
    checkpoints = train(cfg, build_training_data(cfg), model, tmp_path / name)
    return cfg, model, checkpoints


def test_build_model_applies_adapter():
    """Should build the toy detector with LN-tuning and a normalized head"""
    model, report = build_model(load_config("toy"))
    assert model.normalize
    assert report.trainable_count == 114
    assert model.encoder.fingerprint == "init:toy:seed0"


def test_training_writes_checkpoints_and_log(tmp_path):
    """Should write one checkpoint and one epoch record per validated epoch"""
    cfg, _, checkpoints = _run(tmp_path)
    run_dir = tmp_path / "run"

    assert [c.epoch for c in checkpoints] == [0, 1]
    names = sorted(p.name for p in (run_dir / "checkpoints").iterdir())
    assert names == ["epoch_000.pt", "epoch_001.pt"]
    assert (run_dir / "config.yaml").is_file()

    log = MetricsLog(run_dir / METRICS_FILE, resume=True)
    steps = log.records("step")
    assert len(steps) == 2 * 2  # 32 frames at batch 16, two epochs
    assert steps[0]["lr"] == cfg.lr_initial
    assert {"loss", "loss_ce", "loss_alignment", "loss_uniformity"} <= set(steps[0])
    assert len(log.validation_curve()) == 2


def test_frozen_parameters_unchanged(tmp_path):
    """Should leave every frozen encoder tensor bit-identical"""
    cfg = load_config("toy", SMALL)
    model, _ = build_model(cfg)
    before = _frozen_checksums(model)
    trainable_before = model.trainable_state()

    train(cfg, build_training_data(cfg), model, tmp_path)

    assert _frozen_checksums(model) == before
    changed = [
        n for n, t in model.trainable_state().items() if not torch.equal(t, trainable_before[n])
    ]
    assert changed


def test_zero_learning_rate_changes_nothing(tmp_path):
    """Should keep trainable tensors fixed when the learning rate is zero"""
    cfg = load_config("toy", [*SMALL, "lr_initial=0.0", "lr_final=0.0"])
    model, _ = build_model(cfg)
    before = model.trainable_state()

    train(cfg, build_training_data(cfg), model, tmp_path)

    for name, tensor in model.trainable_state().items():
        assert torch.equal(tensor, before[name])


def test_same_seed_same_metrics(tmp_path):
    """Should reproduce the metrics log byte for byte with the same seed"""
    _run(tmp_path, name="a")
    _run(tmp_path, name="b")
    _run(tmp_path, ["seed=1"], name="c")

    first = (tmp_path / "a" / METRICS_FILE).read_bytes()
    assert first == (tmp_path / "b" / METRICS_FILE).read_bytes()
    assert first != (tmp_path / "c" / METRICS_FILE).read_bytes()


def test_max_steps_stops_early(tmp_path):
    """Should stop once the step budget is spent and still validate"""
    _, _, checkpoints = _run(tmp_path, ["max_steps=3"])
    log = MetricsLog(tmp_path / "run" / METRICS_FILE, resume=True)

    assert len(log.records("step")) == 3
    assert [c.epoch for c in checkpoints] == [0, 1]
    assert checkpoints[-1].step == 3


def test_loss_decreases_on_fixed_batch(tmp_path):
    """Should mostly decrease the loss over repeated steps on one batch"""
    cfg = load_config(
        "toy",
        [*SMALL, "setup=ln_norm", "loss_weights.alignment=0", "loss_weights.uniformity=0"],
    )
    model, _ = build_model(cfg)
    data = build_training_data(cfg)
    trainer = Trainer(cfg, model, data, tmp_path)
    images, labels, video_ids, _ = next(iter(build_loader(data.train, 16, shuffle=True)))

    model.train()
    losses = []
    for _ in range(20):
        breakdown, _ = trainer.train_step(images, labels, video_ids, epoch=0)
        losses.append(float(breakdown.total))
        trainer.step += 1

    rises = sum(b > a for a, b in zip(losses, losses[1:]))
    assert rises <= 3
    assert losses[-1] < losses[0]


def test_divergence_writes_diagnostic(tmp_path, monkeypatch):
    """Should stop with a diagnostic snapshot when the loss is not finite"""

    def nan_loss(logits, features, labels, weights):
        nan = torch.tensor(float("nan"))
        return LossBreakdown(total=nan, per_term={"ce": nan})

    monkeypatch.setattr("src.training.trainer.composite", nan_loss)
    cfg = load_config("toy", SMALL)
    model, _ = build_model(cfg)

    with pytest.raises(TrainingDivergedError, match="step 0"):
        train(cfg, build_training_data(cfg), model, tmp_path)

    snapshot = torch.load(tmp_path / DIAGNOSTIC_FILE, weights_only=True)
    assert snapshot["step"] == 0
    assert set(snapshot["trainable_state"]) == set(model.trainable_state())


def test_trainer_preconditions(tmp_path):
    """Should refuse empty training data and a model with nothing to train"""
    cfg = load_config("toy", SMALL)
    model, _ = build_model(cfg)
    data = build_training_data(cfg)

    with pytest.raises(ConfigurationError):
        Trainer(cfg, model, TrainingData(train=[]), tmp_path)

    model.requires_grad_(False)
    with pytest.raises(ConfigurationError):
        Trainer(cfg, model, data, tmp_path)


def test_manifest_config_without_data():
    """Should explain that the config has no training data"""
    cfg = load_config("setup5")
    with pytest.raises(ConfigurationError, match="no training data"):
        build_training_data(cfg)


@pytest.mark.slow
def test_toy_end_to_end(tmp_path):
    """Should reach validation AUROC of at least 0.99 within 200 steps"""
    cfg = load_config("toy")
    model, _ = build_model(cfg)
    before = _frozen_checksums(model)

    checkpoints = train(cfg, build_training_data(cfg), model, tmp_path)

    log = MetricsLog(tmp_path / METRICS_FILE, resume=True)
    assert len(log.records("step")) <= 200
    assert max(c.val_auroc for c in checkpoints) >= 0.99
    assert _frozen_checksums(model) == before


@pytest.mark.slow
def test_ablation_presets_fill_table_and_curves(tmp_path):
    """Should train each setup on toy data and report all five rows and curves"""
    reports = []
    for i in range(1, 6):
        cfg = load_config(
            f"setup{i}",
            [
                "encoder=toy",
                "epochs=2",
                "decay_epochs=2",
                "batch_size=16",
                "precision=full",
                TOY_DATA,
            ],
        )
        model, _ = build_model(cfg)
        run_dir = tmp_path / cfg.name
        train(cfg, build_training_data(cfg), model, run_dir)

        test_loader = build_loader(SyntheticFrameDataset(cfg.data.synthetic, "test"), 16)
        preds = predict(model, test_loader, "synthetic", progress=False)
        curve = MetricsLog(run_dir / METRICS_FILE, resume=True).validation_curve()
        reports.append(build_report(cfg.name, "epoch001", [preds], curve))

    table, _ = emit_report(reports, "table", tmp_path)
    curves, _ = emit_report(reports, "plot-data", tmp_path, name="validation")

    rows = table.read_text().splitlines()[2:]
    assert len(rows) == 5
    assert rows[0].startswith("(1) Linear Probing")
    assert "(5) LN-Tuning + Norm + UnAl + Slerp" in curves.read_text()
