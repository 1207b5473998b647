"""DHW1 checkpoint format: an ordered list of named float64 tensors.

Layout: magic 'DHW1'; u32 tensor count; per tensor: u16 name length,
UTF-8 name, u8 rank, u32 extents, little-endian float64 payload.
Round trips are bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

DHW1_MAGIC = b"DHW1"


def save_checkpoint(tensors: dict[str, np.ndarray], path) -> None:
    with open(path, "wb") as fh:
        fh.write(DHW1_MAGIC)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            # note: ascontiguousarray would promote 0-d arrays to 1-d
            arr = np.asarray(arr, dtype="<f8")
            nb = name.encode("utf-8")
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<B", arr.ndim))
            for ext in arr.shape:
                fh.write(struct.pack("<I", ext))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Load a DHW1 file, preserving tensor order."""
    with open(path, "rb") as fh:
        if fh.read(4) != DHW1_MAGIC:
            raise ValueError(f"{path}: bad magic, not a DHW1 checkpoint")
        (count,) = struct.unpack("<I", fh.read(4))
        tensors = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", fh.read(2))
            name = fh.read(nlen).decode("utf-8")
            (rank,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{rank}I", fh.read(4 * rank)) if rank else ()
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * n)
            if len(buf) != 8 * n:
                raise ValueError(f"{path}: truncated tensor {name!r}")
            tensors[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return tensors
