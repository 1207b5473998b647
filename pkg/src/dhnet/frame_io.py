"""Frame and dataset I/O: luma extraction, I-frame indexing, manifests, PGM/PNG."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict

import numpy as np
from PIL import Image


class ManifestError(ValueError):
    """Raised for malformed manifest files."""


@dataclass
class FrameRecord:
    """One decoded frame in a dataset manifest.

    label: 0 = single-compressed, 1 = double-compressed.
    q_s_last: quantizer scale of the last compression pass (1..31).
    q_m_id: 'Q1', 'Q2', or 'custom'.
    """

    path: str
    label: int
    q_s_last: int
    q_m_id: str
    gop_size: int
    frame_index: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if self.q_s_last < 1:
            raise ValueError(f"q_s_last must be >= 1, got {self.q_s_last}")
        if self.gop_size < 1:
            raise ValueError(f"gop_size must be >= 1, got {self.gop_size}")
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")


_MANIFEST_KEYS = ("path", "label", "q_s_last", "q_m_id", "gop_size", "frame_index")


def rgb_to_y(rgb: np.ndarray) -> np.ndarray:
    """Convert an HxWx3 uint8 RGB frame to its luma plane.

    BT.601 full-range: Y = round(0.299 R + 0.587 G + 0.114 B), with
    round-half-away-from-zero, clamped to [0, 255]. Returns float64 HxW.
    """
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected HxWx3 array, got shape {rgb.shape}")
    r = rgb[..., 0].astype(np.float64)
    g = rgb[..., 1].astype(np.float64)
    b = rgb[..., 2].astype(np.float64)
    y = 0.299 * r + 0.587 * g + 0.114 * b
    # round half away from zero; inputs are nonnegative so floor(y + 0.5) works
    y = np.floor(y + 0.5)
    return np.clip(y, 0.0, 255.0)


def iframe_indices(gop_size: int, n_frames: int) -> list[int]:
    """Frame indices that are intra-coded under a fixed GOP size.

    The first frame of every GOP is the I-frame, so these are the multiples
    of gop_size below n_frames.
    """
    if gop_size < 1:
        raise ValueError(f"gop_size must be >= 1, got {gop_size}")
    if n_frames < 0:
        raise ValueError(f"n_frames must be >= 0, got {n_frames}")
    return list(range(0, n_frames, gop_size))


def write_manifest(records: list[FrameRecord], path: str | os.PathLike) -> None:
    """Write records as UTF-8 JSON lines, one object per frame."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            d = asdict(rec)
            fh.write(json.dumps({k: d[k] for k in _MANIFEST_KEYS}) + "\n")


def load_manifest(path: str | os.PathLike) -> list[FrameRecord]:
    """Load a JSONL manifest, preserving record order."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"{path}:{lineno}: expected a JSON object")
            missing = [k for k in _MANIFEST_KEYS if k not in obj]
            if missing:
                raise ManifestError(f"{path}:{lineno}: missing keys {missing}")
            try:
                records.append(FrameRecord(**{k: obj[k] for k in _MANIFEST_KEYS}))
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc
    return records


def write_pgm(plane: np.ndarray, path: str | os.PathLike) -> None:
    """Write a luma plane as binary PGM (P5, maxval 255), bit-exact."""
    arr = np.asarray(plane)
    if arr.ndim != 2:
        raise ValueError(f"expected 2D plane, got shape {arr.shape}")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("plane samples must lie in [0, 255]")
    data = np.rint(arr).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) as a float64 plane."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval, separated by whitespace/comments
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 supported, got {maxval}")
    data = np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=pos)
    if data.size != w * h:
        raise ValueError(f"{path}: truncated pixel data")
    return data.reshape(h, w).astype(np.float64)


def load_plane(path: str | os.PathLike) -> np.ndarray:
    """Load a luma plane from disk, dispatching on extension.

    PGM files are read bit-exactly; PNG (and other RGB images) go through
    BT.601 luma conversion. Grayscale PNGs pass through unchanged.
    """
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".pgm":
        return read_pgm(path)
    img = Image.open(path)
    if img.mode == "L":
        return np.asarray(img, dtype=np.float64)
    return rgb_to_y(np.asarray(img.convert("RGB")))
