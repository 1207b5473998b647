"""MPEG-4 intra-coding quantization simulator.

Block-level quantization/dequantization of 8x8 DCT coefficients driven by a
quantizer scale q_s and an 8x8 quantization matrix, plus plane-level
compress/decompress round trips used for synthetic data generation and as a
verification oracle. Bitstream emission, motion compensation, and B-frames
are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

BLOCK = 8

# All-ones matrix: quantization driven by q_s alone.
Q1 = np.ones((8, 8), dtype=np.int64)

# Default intra quantization matrix of MPEG-4 part 2.
Q2 = np.array(
    [
        [8, 16, 19, 22, 26, 27, 29, 34],
        [16, 16, 22, 24, 27, 29, 34, 37],
        [19, 22, 26, 27, 29, 34, 34, 38],
        [22, 22, 26, 27, 29, 34, 37, 40],
        [22, 26, 27, 29, 32, 35, 40, 48],
        [26, 27, 29, 32, 35, 40, 48, 58],
        [26, 27, 29, 34, 38, 46, 56, 69],
        [27, 29, 35, 38, 46, 56, 69, 83],
    ],
    dtype=np.int64,
)

QUANT_TABLES = {"Q1": Q1, "Q2": Q2}


def _default_r(s_b: int) -> int:
    return 1 << (s_b - 4)


@dataclass
class QuantConfig:
    """Parameters of one intra quantization pass.

    q_s is the VBR quantizer scale (1..31, lower = higher quality), q_m the
    8x8 matrix of per-frequency divisors. s_b and r are the fixed-point
    scale-bits and rounding value of the integer quantizer.
    """

    q_s: int
    q_m: np.ndarray = field(default_factory=lambda: Q1.copy())
    s_b: int = 17
    r: int | None = None

    def __post_init__(self):
        if not 1 <= self.q_s <= 31:
            raise ValueError(f"q_s must be in 1..31, got {self.q_s}")
        self.q_m = np.asarray(self.q_m, dtype=np.int64)
        if self.q_m.shape != (8, 8):
            raise ValueError(f"q_m must be 8x8, got shape {self.q_m.shape}")
        if (self.q_m < 1).any():
            raise ValueError("all q_m entries must be >= 1")
        if self.s_b < 4:
            raise ValueError(f"s_b must be >= 4, got {self.s_b}")
        if self.r is None:
            self.r = _default_r(self.s_b)


def scale_matrix(q_m: np.ndarray, q_s: int, s_b: int = 17) -> np.ndarray:
    """Scaled quantization matrix S(i,j) = round(2^s_b / (q_m(i,j) * q_s))."""
    q_m = np.asarray(q_m, dtype=np.int64)
    if q_s <= 0 or (q_m <= 0).any():
        raise ValueError("q_m entries and q_s must be positive")
    return np.rint((1 << s_b) / (q_m * q_s)).astype(np.int64)


def quantize(c: np.ndarray, cfg: QuantConfig) -> np.ndarray:
    """Quantize a block of DCT coefficients.

    Sign-symmetric: the magnitude is scaled by S, offset by the rounding
    value r, and right-shifted by (s_b - 3); the sign is reapplied. For
    integer inputs this is bit-exact integer arithmetic; real-valued
    coefficients use the floor extension of the shift.
    """
    c = np.asarray(c, dtype=np.float64)
    s = scale_matrix(cfg.q_m, cfg.q_s, cfg.s_b)
    shift = cfg.s_b - 3
    mag = np.floor((np.abs(c) * s + cfg.r) / float(1 << shift))
    return (np.sign(c) * mag).astype(np.int64)


def dequantize(c_q: np.ndarray, cfg: QuantConfig) -> np.ndarray:
    """Dequantize: C_d = sign(C_q) * ((|C_q| * q_m(i,j) * q_s) >> 3)."""
    c_q = np.asarray(c_q, dtype=np.int64)
    mag = (np.abs(c_q) * cfg.q_m * cfg.q_s) >> 3
    return np.sign(c_q) * mag


def _blockify(plane: np.ndarray) -> np.ndarray:
    """Crop to a multiple of 8 and reshape to (nby, nbx, 8, 8)."""
    h, w = plane.shape
    hc, wc = (h // BLOCK) * BLOCK, (w // BLOCK) * BLOCK
    if hc == 0 or wc == 0:
        raise ValueError(f"plane {h}x{w} smaller than one {BLOCK}x{BLOCK} block")
    p = plane[:hc, :wc]
    return p.reshape(hc // BLOCK, BLOCK, wc // BLOCK, BLOCK).swapaxes(1, 2)


def _deblockify(blocks: np.ndarray) -> np.ndarray:
    nby, nbx = blocks.shape[:2]
    return blocks.swapaxes(1, 2).reshape(nby * BLOCK, nbx * BLOCK)


def compress_plane(plane: np.ndarray, cfg: QuantConfig) -> np.ndarray:
    """One intra-coding pass over a luma plane: the decoded result.

    Per 8x8 block: level shift by -128, forward orthonormal DCT, integer
    quantize + dequantize, inverse DCT, shift back, round, clamp to [0,255].
    Planes not divisible by 8 are cropped at the bottom/right.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2 or plane.size == 0:
        raise ValueError(f"expected a non-empty 2D plane, got shape {plane.shape}")
    blocks = _blockify(plane) - 128.0
    coeffs = scipy.fft.dctn(blocks, axes=(2, 3), norm="ortho")
    # DCT coefficients round to integers before the fixed-point quantizer
    coeffs = np.rint(coeffs)
    cq = quantize(coeffs, cfg)
    cd = dequantize(cq, cfg)
    rec = scipy.fft.idctn(cd.astype(np.float64), axes=(2, 3), norm="ortho") + 128.0
    return np.clip(np.rint(_deblockify(rec)), 0.0, 255.0)


def double_compress(plane: np.ndarray, cfg1: QuantConfig, cfg2: QuantConfig) -> np.ndarray:
    """Two successive intra-coding passes (the double-compression scenario)."""
    return compress_plane(compress_plane(plane, cfg1), cfg2)
