import json
import os

import numpy as np
import pytest

from dhnet.cli import (
    EXIT_ENCODER_MISSING,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    main,
)
from dhnet.encode import EncoderJob, encode_args, decode_args
from dhnet.model import DHNet, StreamConfig, save_model

SMALL = StreamConfig(channels=(2, 3, 4), strides=(2, 1, 1), dense=(8, 6))


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    code = main(
        [
            "--config",
            _size_config(d),
            "synth",
            "--out",
            str(d),
            "--n-planes",
            "12",
            "--seed",
            "3",
        ]
    )
    assert code == EXIT_OK
    return d


def _size_config(d):
    cfg = d / "cfg.toml"
    cfg.write_text("[synth]\nsize = [64, 64]\n")
    return str(cfg)


@pytest.fixture()
def checkpoint(tmp_path_factory):
    d = tmp_path_factory.mktemp("ckpt")
    p = d / "model.dhw1"
    save_model(DHNet(SMALL, seed=0), p)
    return str(p)


class TestSynth:
    def test_smoke_and_json_output(self, dataset, capsys):
        assert (dataset / "manifest.jsonl").exists()
        assert (dataset / "train.jsonl").exists()

    def test_flag_beats_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text("[synth]\nn_planes = 4\nsize = [32, 32]\nseed = 1\n")
        code, out, _ = run(
            capsys,
            "--config",
            str(cfg),
            "synth",
            "--out",
            str(tmp_path / "d"),
            "--n-planes",
            "6",
        )
        assert code == EXIT_OK
        assert json.loads(out)["n_planes"] == 6

    def test_config_beats_default(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text("[synth]\nn_planes = 4\nsize = [32, 32]\n")
        code, out, _ = run(
            capsys, "--config", str(cfg), "synth", "--out", str(tmp_path / "d")
        )
        assert code == EXIT_OK
        assert json.loads(out)["n_planes"] == 4

    def test_missing_config_is_io_error(self, tmp_path, capsys):
        code, _, err = run(
            capsys,
            "--config",
            str(tmp_path / "nope.toml"),
            "synth",
            "--out",
            str(tmp_path / "d"),
        )
        assert code == EXIT_IO
        assert "error" in json.loads(err)

    def test_invalid_toml_is_usage_error(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text("not [valid\n")
        code, _, err = run(
            capsys, "--config", str(cfg), "synth", "--out", str(tmp_path / "d")
        )
        assert code == EXIT_USAGE


class TestPipeline:
    def test_extract_eval_detect(self, dataset, tmp_path, capsys):
        feats = tmp_path / "all.dhf1"
        code, out, _ = run(
            capsys, "extract", str(dataset / "manifest.jsonl"), "--out", str(feats)
        )
        assert code == EXIT_OK
        assert json.loads(out)["records"] == 12

        # train a tiny model for two epochs just to exercise the command
        ckpt = tmp_path / "m.dhw1"
        code, out, _ = run(
            capsys,
            "train",
            "--train-features",
            str(feats),
            "--val-features",
            str(feats),
            "--out",
            str(ckpt),
            "--epochs",
            "2",
            "--batch-size",
            "4",
            "--channels",
            "2",
            "3",
            "4",
            "--strides",
            "2",
            "1",
            "1",
            "--dense",
            "8",
            "6",
            "--bn-momentum",
            "0.9",
        )
        assert code == EXIT_OK
        assert "best_val_acc" in json.loads(out)
        assert ckpt.exists() and (tmp_path / "m.dhw1.json").exists()

        report = tmp_path / "report.json"
        scores = tmp_path / "scores.csv"
        code, out, _ = run(
            capsys,
            "eval",
            "--checkpoint",
            str(ckpt),
            "--features",
            str(feats),
            "--out",
            str(report),
            "--scores-csv",
            str(scores),
        )
        assert code == EXIT_OK
        rep = json.loads(report.read_text())
        assert set(rep) == {"acc", "tnr", "pre", "rec", "f1", "auc"}
        header = scores.read_text().splitlines()[0]
        assert header == "frame_index,score,label"

        code, out, _ = run(
            capsys,
            "detect",
            "--checkpoint",
            str(ckpt),
            "--frames",
            str(dataset / "manifest.jsonl"),
            "--mode",
            "first-iframe",
        )
        assert code == EXIT_OK
        verdict = json.loads(out)
        assert verdict["frame_index"] == 0 and verdict["label"] in (0, 1)

    def test_detect_gop_vote(self, dataset, checkpoint, capsys):
        code, out, _ = run(
            capsys,
            "detect",
            "--checkpoint",
            checkpoint,
            "--frames",
            str(dataset / "manifest.jsonl"),
            "--mode",
            "gop",
            "--phi",
            "3",
        )
        assert code == EXIT_OK
        result = json.loads(out)
        assert result["phi"] >= 1
        assert result["label"] in (0, 1)

    def test_detect_temporal_writes_csv(self, dataset, checkpoint, tmp_path, capsys):
        out_csv = tmp_path / "series.csv"
        code, out, _ = run(
            capsys,
            "detect",
            "--checkpoint",
            checkpoint,
            "--frames",
            str(dataset / "manifest.jsonl"),
            "--mode",
            "temporal",
            "--out",
            str(out_csv),
        )
        assert code == EXIT_OK
        assert out_csv.read_text().startswith("frame_index,score,label")

    def test_detect_frames_directory(self, dataset, checkpoint, capsys):
        code, out, _ = run(
            capsys,
            "detect",
            "--checkpoint",
            checkpoint,
            "--frames",
            str(dataset),
            "--mode",
            "frame",
            "--q-s",
            "3",
            "--q-m-id",
            "Q2",
        )
        assert code == EXIT_OK
        frames = json.loads(out)["frames"]
        assert len(frames) == 12


class TestIngest:
    def test_ingest_directory(self, dataset, tmp_path, capsys):
        out = tmp_path / "man.jsonl"
        code, stdout, _ = run(
            capsys,
            "ingest",
            "--frames",
            str(dataset),
            "--out",
            str(out),
            "--label",
            "1",
            "--q-s",
            "5",
            "--q-m-id",
            "Q2",
        )
        assert code == EXIT_OK
        assert json.loads(stdout)["records"] == 12

    def test_empty_directory_is_io_error(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        code, _, err = run(
            capsys,
            "ingest",
            "--frames",
            str(empty),
            "--out",
            str(tmp_path / "m.jsonl"),
            "--label",
            "0",
            "--q-s",
            "3",
        )
        assert code == EXIT_IO

    def test_unknown_matrix_is_usage_error(self, dataset, tmp_path, capsys):
        code, _, err = run(
            capsys,
            "ingest",
            "--frames",
            str(dataset),
            "--out",
            str(tmp_path / "m.jsonl"),
            "--label",
            "0",
            "--q-s",
            "3",
            "--q-m-id",
            "Q9",
        )
        assert code == EXIT_USAGE


class TestEncode:
    def test_missing_encoder_exit_code(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("DHNET_ENCODER", "definitely-not-a-real-binary")
        code, _, err = run(
            capsys,
            "encode",
            "--input",
            str(tmp_path / "in.y4m"),
            "--out",
            str(tmp_path / "out.avi"),
            "--q-s",
            "3",
        )
        assert code == EXIT_ENCODER_MISSING
        assert "error" in json.loads(err)

    def test_golden_encode_args(self):
        job = EncoderJob("in.y4m", "out.avi", q_s=5, gop_size=6)
        assert encode_args(job) == [
            "-y",
            "-i",
            "in.y4m",
            "-c:v",
            "libxvid",
            "-q:v",
            "5",
            "-g",
            "6",
            "-keyint_min",
            "6",
            "-bf",
            "0",
            "-sc_threshold",
            "0",
            "out.avi",
        ]

    def test_decode_args(self):
        args = decode_args("v.avi", "frames")
        assert args[:3] == ["-y", "-i", "v.avi"]
        assert args[3].endswith("frame_%06d.png")


class TestPlot:
    def _scores_csv(self, tmp_path):
        p = tmp_path / "s.csv"
        rows = ["frame_index,score,label"]
        rng = np.random.default_rng(0)
        for i in range(20):
            label = i % 2
            score = 0.3 * rng.random() + 0.6 * label
            rows.append(f"{i},{score:.6f},{label}")
        p.write_text("\n".join(rows) + "\n")
        return p

    def test_series_svg_deterministic(self, tmp_path, capsys):
        src = self._scores_csv(tmp_path)
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert run(capsys, "plot", str(src), "--out", str(a))[0] == EXIT_OK
        assert run(capsys, "plot", str(src), "--out", str(b))[0] == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().startswith("<svg")
        assert "timestamp" not in a.read_text()

    def test_roc_svg_with_sidecar_csv(self, tmp_path, capsys):
        src = self._scores_csv(tmp_path)
        out = tmp_path / "roc.svg"
        code, stdout, _ = run(capsys, "plot", str(src), "--kind", "roc", "--out", str(out))
        assert code == EXIT_OK
        assert "AUC" in out.read_text()
        side = tmp_path / "roc.csv"
        assert side.read_text().startswith("fpr,tpr")

    def test_missing_csv_is_io_error(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "plot", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x.svg")
        )
        assert code == EXIT_IO

    def test_malformed_csv_is_usage_error(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1,2\n")
        code, _, err = run(capsys, "plot", str(p), "--out", str(tmp_path / "x.svg"))
        assert code == EXIT_USAGE
