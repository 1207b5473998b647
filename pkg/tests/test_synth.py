import json
import os

import numpy as np
import pytest

from dhnet.frame_io import load_manifest, read_pgm
from dhnet.synth import SynthConfig, make_texture, q_pairs, split_records, synthesize_dataset


class TestConfig:
    def test_rejects_too_few_planes(self):
        with pytest.raises(ValueError):
            SynthConfig(n_planes=1)

    def test_rejects_out_of_range_q(self):
        with pytest.raises(ValueError):
            SynthConfig(q_values=(0, 5))

    def test_rejects_single_q_value(self):
        with pytest.raises(ValueError):
            SynthConfig(q_values=(5, 5))

    def test_rejects_unknown_matrix(self):
        with pytest.raises(ValueError):
            SynthConfig(q_m_id="Q9")


class TestMakeTexture:
    def test_range_and_dtype(self):
        rng = np.random.Generator(np.random.PCG64(0))
        plane = make_texture(rng, size=(64, 48))
        assert plane.shape == (64, 48)
        assert plane.min() >= 0 and plane.max() <= 255
        assert (plane == np.rint(plane)).all()

    def test_seed_reproducible(self):
        a = make_texture(np.random.Generator(np.random.PCG64(3)), size=(32, 32))
        b = make_texture(np.random.Generator(np.random.PCG64(3)), size=(32, 32))
        assert (a == b).all()

    def test_has_texture(self):
        rng = np.random.Generator(np.random.PCG64(1))
        plane = make_texture(rng, size=(64, 64))
        assert plane.std() > 1.0


class TestQPairs:
    def test_three_values(self):
        assert set(q_pairs((3, 5, 7))) == {
            (3, 5), (3, 7), (5, 3), (5, 7), (7, 3), (7, 5),
        }

    def test_no_self_pairs(self):
        assert all(a != b for a, b in q_pairs((1, 2, 3, 4)))


class TestSplitRecords:
    def test_8_1_1_exact(self):
        recs = list(range(100))
        s = split_records(recs)
        assert len(s["train"]) == 80 and len(s["val"]) == 10 and len(s["test"]) == 10

    def test_partition_preserves_order(self):
        recs = list(range(57))
        s = split_records(recs)
        assert s["train"] + s["val"] + s["test"] == recs


class TestSynthesizeDataset:
    def test_small_dataset(self, tmp_path):
        cfg = SynthConfig(n_planes=20, size=(64, 64), seed=5)
        info = synthesize_dataset(tmp_path, cfg)
        assert info["labels"] == {0: 10, 1: 10}
        records = load_manifest(tmp_path / "manifest.jsonl")
        assert len(records) == 20
        # labels alternate; every referenced plane exists and round-trips
        assert [r.label for r in records] == [i % 2 for i in range(20)]
        for r in records[:4]:
            plane = read_pgm(tmp_path / r.path)
            assert plane.shape == (64, 64)
        for split in ("train", "val", "test"):
            assert (tmp_path / f"{split}.jsonl").exists()
        assert info["splits"] == {"train": 16, "val": 2, "test": 2}

    def test_deterministic_bytes(self, tmp_path):
        cfg = SynthConfig(n_planes=6, size=(32, 32), seed=7)
        d1, d2 = tmp_path / "a", tmp_path / "b"
        synthesize_dataset(d1, cfg)
        synthesize_dataset(d2, cfg)
        for name in sorted(os.listdir(d1)):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_q_s_last_recorded(self, tmp_path):
        cfg = SynthConfig(n_planes=12, size=(32, 32), q_values=(3, 5), seed=1)
        synthesize_dataset(tmp_path, cfg)
        for r in load_manifest(tmp_path / "manifest.jsonl"):
            assert r.q_s_last in (3, 5)
            assert r.q_m_id == "Q2"
