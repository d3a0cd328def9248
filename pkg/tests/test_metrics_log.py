"""Tests for the training metrics log"""

import json

from src.monitoring import MetricsLog


def test_step_and_epoch_records(tmp_path):
    """Should append typed records and read them back by kind"""
    log = MetricsLog(tmp_path / "metrics.jsonl")
    log.log_step(0, 0, 1e-3, {"loss": 0.7, "loss_ce": 0.7})
    log.log_step(1, 0, 9e-4, {"loss": 0.6, "loss_ce": 0.6})
    log.log_epoch(0, step=2, train_auroc=0.8, val_auroc=0.75)

    assert len(log.records()) == 3
    assert [r["step"] for r in log.records("step")] == [0, 1]
    assert log.records("epoch")[0]["val_auroc"] == 0.75


def test_new_log_truncates_and_resume_keeps(tmp_path):
    """Should start empty unless resuming"""
    path = tmp_path / "metrics.jsonl"
    MetricsLog(path).log_epoch(0, val_auroc=0.5)

    assert len(MetricsLog(path, resume=True).records()) == 1
    assert MetricsLog(path).records() == []


def test_non_finite_values_written_as_strings(tmp_path):
    """Should keep every line valid JSON when a loss is NaN"""
    log = MetricsLog(tmp_path / "metrics.jsonl")
    log.log_step(0, 0, 1e-3, {"loss": float("nan"), "loss_ce": float("inf")})

    row = json.loads(log.path.read_text())
    assert row["loss"] == "nan"
    assert row["loss_ce"] == "inf"


def test_validation_curve_skips_unvalidated_epochs(tmp_path):
    """Should list only epochs that carry a validation AUROC"""
    log = MetricsLog(tmp_path / "metrics.jsonl")
    log.log_epoch(0, val_auroc=0.6)
    log.log_epoch(1, val_auroc=None)
    log.log_epoch(2, val_auroc=0.8)

    assert log.validation_curve() == [(0, 0.6), (2, 0.8)]


def test_curve_trend(tmp_path):
    """Should report the best epoch, the earliest among ties, and the direction"""
    log = MetricsLog(tmp_path / "metrics.jsonl")
    assert log.curve_trend() is None

    for epoch, value in enumerate([0.6, 0.7, 0.9, 0.9, 0.95]):
        log.log_epoch(epoch, val_auroc=value)
    trend = log.curve_trend()

    assert trend.best == 0.95 and trend.best_epoch == 4
    assert trend.trend_direction == "increasing"
    assert trend.data_points == 5

    flat = MetricsLog(tmp_path / "flat.jsonl")
    for epoch in range(3):
        flat.log_epoch(epoch, val_auroc=0.8)
    trend = flat.curve_trend()
    assert trend.trend_direction == "stable"
    assert trend.best_epoch == 0
