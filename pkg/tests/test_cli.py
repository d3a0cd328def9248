"""Tests for the deepfake-peft command line"""

import json

import pytest
import torch
from src.cli import build_parser, main
from src.losses import LossBreakdown
from src.pipeline import write_planted_videos

SMALL = [
    "epochs=2",
    "decay_epochs=2",
    "batch_size=16",
    "data.synthetic.videos_per_class=4",
    "data.synthetic.val_videos_per_class=2",
    "data.synthetic.test_videos_per_class=2",
    "data.synthetic.frames_per_video=4",
]


@pytest.fixture(scope="module")
def toy_run(tmp_path_factory):
    """A trained toy run shared by the evaluate, report and plot tests"""
    run_dir = tmp_path_factory.mktemp("runs") / "toy"
    assert main(["train", "--config", "toy", "--output", str(run_dir), "--override", *SMALL]) == 0
    return run_dir


def test_parser_requires_a_command():
    """Should exit with a usage error when no subcommand is given"""
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_inspect_large_ln_tuning(capsys):
    """Should report the LN-tuning share of the large encoder without loading weights"""
    assert main(["inspect", "--config", "setup2"]) == 0
    out = capsys.readouterr().out
    assert "ln_tuning on large" in out
    assert "(0.03%)" in out


def test_inspect_needs_something(capsys):
    """Should exit 2 when neither a config nor manifests are given"""
    assert main(["inspect"]) == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_override_exits_2(tmp_path, capsys):
    """Should reject an override for a key the config lacks"""
    run_dir = tmp_path / "run"
    code = main(["train", "--config", "toy", "--output", str(run_dir), "--override", "warp=9"])
    assert code == 2
    assert "no such config key" in capsys.readouterr().err
    assert not (tmp_path / "run").exists()


def test_report_on_empty_directory(tmp_path, capsys):
    """Should exit 2 and write no report when a directory has no dumps"""
    (tmp_path / "empty").mkdir()
    code = main(
        ["report", "--predictions", str(tmp_path / "empty"), "--output", str(tmp_path / "out")]
    )
    assert code == 2
    assert "no prediction dumps" in capsys.readouterr().err
    assert not (tmp_path / "out" / "report.txt").exists()


def test_train_skips_existing_run(toy_run, capsys):
    """Should leave a finished run untouched unless forced"""
    metrics = toy_run / "metrics.jsonl"
    before = metrics.read_bytes()

    assert main(["train", "--config", "toy", "--output", str(toy_run), "--override", *SMALL]) == 0
    assert metrics.read_bytes() == before
    assert str(metrics) in capsys.readouterr().out


def test_forced_retrain_is_reproducible(toy_run, tmp_path):
    """Should write the same metrics log when the same config is trained again"""
    other = tmp_path / "again"
    assert main(["train", "--config", "toy", "--output", str(other), "--override", *SMALL]) == 0
    forced = ["train", "--config", "toy", "--output", str(other), "--force", "--override", *SMALL]
    assert main(forced) == 0
    assert (other / "metrics.jsonl").read_bytes() == (toy_run / "metrics.jsonl").read_bytes()


def _nan_loss(logits, features, labels, weights):
    nan = torch.tensor(float("nan"))
    return LossBreakdown(total=nan, per_term={"ce": nan})


def test_train_redoes_a_diverged_run(toy_run, tmp_path, monkeypatch, capsys):
    """Should mark a diverged run failed and retrain it on the next call"""
    run_dir = tmp_path / "run"
    command = ["train", "--config", "toy", "--output", str(run_dir), "--override", *SMALL]

    with monkeypatch.context() as patch:
        patch.setattr("src.training.trainer.composite", _nan_loss)
        assert main(command) == 1
    failed = json.loads((run_dir / "train.failed.json").read_text())
    assert failed["error"].startswith("TrainingDivergedError")
    assert not (run_dir / "train.complete.json").exists()
    assert (run_dir / "diagnostic.pt").is_file()

    assert main(command) == 0
    assert len(list((run_dir / "checkpoints").glob("epoch_*.pt"))) == 2
    assert (run_dir / "train.complete.json").is_file()
    assert not (run_dir / "train.failed.json").exists()
    assert not (run_dir / "diagnostic.pt").exists()
    assert (run_dir / "metrics.jsonl").read_bytes() == (toy_run / "metrics.jsonl").read_bytes()
    capsys.readouterr()


def test_evaluate_report_plot(toy_run, tmp_path, capsys):
    """Should dump test predictions, tabulate them and plot the validation curve"""
    predictions = tmp_path / "predictions"
    assert main(["evaluate", "--run", str(toy_run), "--output", str(predictions)]) == 0

    run = json.loads((predictions / "run.json").read_text())
    assert run["setup_name"] == "toy"
    assert run["checkpoint_id"].startswith("epoch")
    dump = predictions / "synthetic.predictions.jsonl"
    assert len(dump.read_text().splitlines()) == 2 * 2 * 4

    reports = tmp_path / "reports"
    assert main(["report", "--predictions", str(predictions), "--output", str(reports)]) == 0
    table = json.loads((reports / "report.json").read_text())
    assert table["columns"] == ["synthetic"]
    assert table["rows"][0]["label"] == "Toy (LN-Tuning + Norm + UnAl + Slerp)"

    assert main(["plot", "--runs", str(toy_run), "--output", str(reports)]) == 0
    series = json.loads((reports / "validation_curves.json").read_text())["series"]
    assert series[0]["epochs"] == [0, 1]
    assert (reports / "validation_curves.png").is_file()
    capsys.readouterr()


def test_evaluate_named_checkpoint(toy_run, tmp_path, capsys):
    """Should evaluate a checkpoint by id and reject unknown ids"""
    out = tmp_path / "epoch0"
    evaluate = ["evaluate", "--run", str(toy_run), "--checkpoint"]
    assert main([*evaluate, "epoch000", "--output", str(out)]) == 0
    assert json.loads((out / "run.json").read_text())["checkpoint_id"] == "epoch000"

    code = main([*evaluate, "epoch042", "--output", str(tmp_path / "x")])
    assert code == 2
    assert "epoch000, epoch001" in capsys.readouterr().err


def test_evaluate_needs_a_run(tmp_path):
    """Should exit 2 for a directory that is not a training output"""
    assert main(["evaluate", "--run", str(tmp_path), "--output", str(tmp_path / "out")]) == 2


def test_preprocess_and_inspect_manifests(tmp_path, capsys):
    """Should preprocess planted-face videos and summarize the manifests"""
    videos = write_planted_videos(tmp_path / "clips", real=2, fake=2, faceless=1)
    out = tmp_path / "frames"
    args = ["preprocess", "--input", str(videos), "--output", str(out), "--dataset", "Toy",
            "--detector", "planted", "--frames", "4", "--workers", "1"]

    assert main(args) == 0
    assert "processed 4 videos, excluded 1" in capsys.readouterr().out
    manifest = out / "manifest.jsonl"
    assert len(manifest.read_text().splitlines()) == 4

    assert main(args) == 0
    assert "processed" not in capsys.readouterr().out

    assert main(["inspect", "--manifests", str(manifest), "--exclusions", str(out)]) == 0
    text = capsys.readouterr().out
    rows = [[cell.strip() for cell in line.split("|")] for line in text.splitlines() if "|" in line]
    assert ["Toy", "2", "2 (+1)"] in rows


def test_preprocess_rejects_too_many_frames(tmp_path, capsys):
    """Should exit 2 before touching any video when more than 32 frames are requested"""
    videos = write_planted_videos(tmp_path / "clips", real=1, fake=1)
    out = tmp_path / "frames"
    args = ["preprocess", "--input", str(videos), "--output", str(out), "--detector", "planted"]

    assert main([*args, "--frames", "40", "--workers", "1"]) == 2
    assert "frames must be in [1, 32]" in capsys.readouterr().err
    assert not out.exists()


def test_preprocess_redoes_unfinished_output(tmp_path, capsys):
    """Should rebuild a manifest that has no completion marker"""
    videos = write_planted_videos(tmp_path / "clips", real=1, fake=1)
    out = tmp_path / "frames"
    out.mkdir()
    (out / "manifest.jsonl").write_text("")
    args = ["preprocess", "--input", str(videos), "--output", str(out), "--dataset", "Toy"]

    assert main([*args, "--detector", "planted", "--frames", "4", "--workers", "1"]) == 0
    assert "processed 2 videos, excluded 0" in capsys.readouterr().out
    assert len((out / "manifest.jsonl").read_text().splitlines()) == 2
    assert (out / "preprocess.complete.json").is_file()
