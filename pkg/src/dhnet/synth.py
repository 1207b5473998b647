"""Seeded synthetic dataset generation.

Textures mix a smooth gradient, band-limited noise, and hard-edged
rectangles so both flat and textured regions stress the quantizer. Single
samples get one intra-coding pass, double samples two passes with distinct
quantizer scales; everything is reproducible from the seed.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage

from .frame_io import FrameRecord, write_manifest, write_pgm
from .intra_quant import QUANT_TABLES, QuantConfig, compress_plane, double_compress


@dataclass
class SynthConfig:
    n_planes: int = 2000
    size: tuple[int, int] = (256, 256)
    q_values: tuple[int, ...] = (3, 5, 7)
    q_m_id: str = "Q2"
    gop_size: int = 6
    seed: int = 0
    # relative weights of gradient / noise / rectangle components
    texture_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.n_planes < 2:
            raise ValueError("need at least 2 planes (one per class)")
        if any(not 1 <= q <= 31 for q in self.q_values):
            raise ValueError("q values must lie in 1..31")
        if len(set(self.q_values)) < 2:
            raise ValueError("need at least two distinct q values for double pairs")
        if self.q_m_id not in QUANT_TABLES:
            raise ValueError(f"q_m_id must be one of {sorted(QUANT_TABLES)}")


def make_texture(rng: np.random.Generator, size=(256, 256), weights=(1.0, 1.0, 1.0)):
    """One synthetic luma plane in [0, 255]."""
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)

    gx, gy = rng.uniform(-1, 1, size=2)
    gradient = gx * xx / w + gy * yy / h
    span = np.ptp(gradient)
    if span > 0:
        gradient = (gradient - gradient.min()) / span
    gradient = 96.0 + 64.0 * gradient

    sigma = rng.uniform(0.5, 2.0)
    noise = scipy.ndimage.gaussian_filter(rng.standard_normal((h, w)), sigma)
    noise *= rng.uniform(4.0, 20.0) / max(noise.std(), 1e-9)

    rects = np.zeros((h, w))
    for _ in range(rng.integers(3, 9)):
        rh = int(rng.integers(h // 16, h // 3))
        rw = int(rng.integers(w // 16, w // 3))
        r0 = int(rng.integers(0, h - rh))
        c0 = int(rng.integers(0, w - rw))
        rects[r0 : r0 + rh, c0 : c0 + rw] += rng.uniform(-30.0, 30.0)

    wg, wn, wr = weights
    plane = 128.0 + wg * (gradient - 128.0) + wn * noise + wr * rects
    return np.clip(np.rint(plane), 0.0, 255.0)


def q_pairs(q_values) -> list[tuple[int, int]]:
    """All ordered (q1, q2) pairs with q1 != q2."""
    return [p for p in itertools.product(q_values, repeat=2) if p[0] != p[1]]


def synthesize_dataset(out_dir, cfg: SynthConfig) -> dict:
    """Generate planes + manifests; returns summary info.

    Planes alternate labels for an exact 1:1 class balance; quantizer
    configurations cycle through the single q values and the ordered
    distinct pairs. Writes manifest.jsonl plus train/val/test splits
    (8:1:1 by plane).
    """
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    q_m = QUANT_TABLES[cfg.q_m_id]
    pairs = q_pairs(cfg.q_values)
    singles = list(cfg.q_values)

    records = []
    for i in range(cfg.n_planes):
        plane = make_texture(rng, cfg.size, cfg.texture_weights)
        label = i % 2
        if label == 0:
            q2 = singles[(i // 2) % len(singles)]
            out = compress_plane(plane, QuantConfig(q2, q_m))
        else:
            q1, q2 = pairs[(i // 2) % len(pairs)]
            out = double_compress(plane, QuantConfig(q1, q_m), QuantConfig(q2, q_m))
        name = f"plane_{i:06d}.pgm"
        write_pgm(out, os.path.join(out_dir, name))
        records.append(
            FrameRecord(
                path=name,
                label=label,
                q_s_last=q2,
                q_m_id=cfg.q_m_id,
                gop_size=cfg.gop_size,
                frame_index=0,
            )
        )

    write_manifest(records, os.path.join(out_dir, "manifest.jsonl"))
    splits = split_records(records)
    for split_name, recs in splits.items():
        write_manifest(recs, os.path.join(out_dir, f"{split_name}.jsonl"))
    return {
        "n_planes": cfg.n_planes,
        "labels": {0: sum(r.label == 0 for r in records), 1: sum(r.label == 1 for r in records)},
        "splits": {k: len(v) for k, v in splits.items()},
    }


def split_records(records, ratios=(8, 1, 1)) -> dict:
    """Deterministic 8:1:1 train/val/test split by record position."""
    total = sum(ratios)
    n = len(records)
    n_train = n * ratios[0] // total
    n_val = n * ratios[1] // total
    return {
        "train": records[:n_train],
        "val": records[n_train : n_train + n_val],
        "test": records[n_train + n_val :],
    }
