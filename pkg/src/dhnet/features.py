"""Multi-scale block-DCT histogram features and the auxiliary quantization feature.

For each block size delta in {4, 8, 16}, the luma plane is split into
delta x delta blocks, each block is transformed with the orthonormal 2D
DCT-II, and a per-frequency cumulative exceedance histogram over integer bin
boundaries -alpha..alpha is differenced into the feature tensor of shape
(2*alpha, delta^2). The auxiliary feature is the row-major vectorized
quantization matrix scaled by the quantizer scale (64 entries).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft

ALPHA = 60
DELTAS = (4, 8, 16)


def block_dct_stack(plane: np.ndarray, delta: int) -> np.ndarray:
    """Per-frequency channels of the delta x delta block DCT.

    Returns shape (delta^2, H/delta, W/delta); channel u*delta+v holds the
    orthonormal DCT-II coefficient (u, v) of every block. Samples are used
    as-is in [0, 255] (no level shift). Planes not divisible by delta are
    cropped at the bottom/right.
    """
    if delta not in DELTAS:
        raise ValueError(f"delta must be one of {DELTAS}, got {delta}")
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    if h < delta or w < delta:
        raise ValueError(f"plane {h}x{w} smaller than block size {delta}")
    hc, wc = (h // delta) * delta, (w // delta) * delta
    blocks = (
        plane[:hc, :wc]
        .reshape(hc // delta, delta, wc // delta, delta)
        .swapaxes(1, 2)
    )
    coeffs = scipy.fft.dctn(blocks, axes=(2, 3), norm="ortho")
    # (nby, nbx, du, dv) -> (du*delta+dv, nby, nbx)
    return coeffs.transpose(2, 3, 0, 1).reshape(delta * delta, hc // delta, wc // delta)


def cumulative_hist(stack: np.ndarray, alpha: int = ALPHA) -> np.ndarray:
    """Cumulative exceedance histogram B of shape (2*alpha + 1, delta^2).

    B[b, c] is the fraction of blocks whose frequency-c coefficient is
    strictly greater than boundary b, for b in {-alpha, ..., alpha}.
    Coefficients at exactly b do not count (the threshold maps zero to 0).
    """
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    n_ch = stack.shape[0]
    coeffs = stack.reshape(n_ch, -1)
    bounds = np.arange(-alpha, alpha + 1, dtype=np.float64)
    # (bins, channels, blocks) boolean reduce; fine for desk-scale planes
    return (coeffs[None, :, :] > bounds[:, None, None]).mean(axis=2)


def hist_feature(cum: np.ndarray) -> np.ndarray:
    """Adjacent-bin difference of the cumulative histogram.

    F[b, c] = B[b+1, c] - B[b, c], shape (2*alpha, delta^2); entries lie in
    [-1, 0] and -F[b, c] is the fraction of coefficients in (b, b+1].
    """
    return np.diff(cum, axis=0)


def aux_feature(q_m: np.ndarray, q_s: int) -> np.ndarray:
    """Row-major vectorized quantization matrix scaled by q_s (64 entries)."""
    q_m = np.asarray(q_m, dtype=np.float64)
    if q_m.shape != (8, 8):
        raise ValueError(f"q_m must be 8x8, got shape {q_m.shape}")
    if not 1 <= q_s <= 31:
        raise ValueError(f"q_s must be in 1..31, got {q_s}")
    return q_m.reshape(64) * q_s


def extract_all(
    plane: np.ndarray, q_m: np.ndarray, q_s: int, alpha: int = ALPHA
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The four model inputs: histogram features for delta 4/8/16 and F_a."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.shape[0] < 16 or plane.shape[1] < 16:
        raise ValueError(f"plane must be at least 16x16, got {plane.shape}")
    hists = tuple(
        hist_feature(cumulative_hist(block_dct_stack(plane, d), alpha)) for d in DELTAS
    )
    return hists + (aux_feature(q_m, q_s),)


# ---------------------------------------------------------------------------
# DHF1 feature file format

DHF1_MAGIC = b"DHF1"


@dataclass
class FeatureRecord:
    """One extracted sample: label, last-pass q_s, three histograms, aux vector."""

    label: int
    q_s: int
    hists: tuple[np.ndarray, np.ndarray, np.ndarray]  # deltas 4, 8, 16
    aux: np.ndarray


def write_features(records: list[FeatureRecord], path) -> None:
    """Write records to a DHF1 file (little-endian, float32 payload)."""
    with open(path, "wb") as fh:
        fh.write(DHF1_MAGIC)
        fh.write(struct.pack("<I", len(records)))
        for rec in records:
            fh.write(struct.pack("<BB", rec.label, rec.q_s))
            for delta, hist in zip(DELTAS, rec.hists):
                rows, cols = hist.shape
                fh.write(struct.pack("<BHH", delta, rows, cols))
                fh.write(np.ascontiguousarray(hist, dtype="<f4").tobytes())
            aux = np.asarray(rec.aux, dtype="<f4")
            if aux.size != 64:
                raise ValueError(f"aux vector must have 64 entries, got {aux.size}")
            fh.write(aux.tobytes())


def read_features(path) -> list[FeatureRecord]:
    """Read a DHF1 file; bit-exact inverse of write_features."""
    with open(path, "rb") as fh:
        if fh.read(4) != DHF1_MAGIC:
            raise ValueError(f"{path}: bad magic, not a DHF1 file")
        (count,) = struct.unpack("<I", fh.read(4))
        records = []
        for _ in range(count):
            label, q_s = struct.unpack("<BB", fh.read(2))
            hists = []
            for expected_delta in DELTAS:
                delta, rows, cols = struct.unpack("<BHH", fh.read(5))
                if delta != expected_delta:
                    raise ValueError(
                        f"{path}: expected delta {expected_delta}, got {delta}"
                    )
                buf = fh.read(rows * cols * 4)
                hists.append(
                    np.frombuffer(buf, dtype="<f4").reshape(rows, cols).copy()
                )
            aux = np.frombuffer(fh.read(64 * 4), dtype="<f4").copy()
            records.append(FeatureRecord(label, q_s, tuple(hists), aux))
    return records
