"""Optional wrapper around an external FFmpeg/libxvid encoder.

The toolkit itself never requires the encoder; this wrapper documents and
renders the argument lists for VBR quantizer-scale encoding with a fixed
GOP, launches the binary when present, and dumps decoded frames for
ingestion. The binary is resolved from the DHNET_ENCODER environment
variable, falling back to 'ffmpeg' on PATH.
"""

from __future__ import annotations

import os
import shutil
import subprocess
from dataclasses import dataclass, field

ENCODER_ENV = "DHNET_ENCODER"


class EncoderMissingError(RuntimeError):
    """The external encoder binary could not be found."""


class EncoderFailedError(RuntimeError):
    """The encoder exited nonzero; the captured log is attached."""

    def __init__(self, message, log=""):
        super().__init__(message)
        self.log = log


@dataclass
class EncoderJob:
    input_path: str
    output_path: str
    q_s: int
    gop_size: int
    codec: str = "libxvid"
    extra_args: list[str] = field(default_factory=list)


def resolve_encoder() -> str:
    """Path of the encoder binary, or raise EncoderMissingError."""
    candidate = os.environ.get(ENCODER_ENV, "ffmpeg")
    path = shutil.which(candidate)
    if path is None:
        raise EncoderMissingError(
            f"encoder binary {candidate!r} not found; install FFmpeg with libxvid "
            f"or point {ENCODER_ENV} at it"
        )
    return path


def encode_args(job: EncoderJob) -> list[str]:
    """Rendered argument list (without the binary itself).

    Fixed-quantizer VBR: -q:v pins the quantizer scale; -g/-keyint_min fix
    the GOP size; -bf 0 disables B-frames; -sc_threshold 0 stops scene-cut
    I-frame insertion so the GOP structure stays exactly I followed by
    gop_size-1 P-frames.
    """
    return [
        "-y",
        "-i",
        job.input_path,
        "-c:v",
        job.codec,
        "-q:v",
        str(job.q_s),
        "-g",
        str(job.gop_size),
        "-keyint_min",
        str(job.gop_size),
        "-bf",
        "0",
        "-sc_threshold",
        "0",
        *job.extra_args,
        job.output_path,
    ]


def decode_args(video_path: str, frames_dir: str) -> list[str]:
    """Argument list for dumping every decoded frame as PNG."""
    return ["-y", "-i", video_path, os.path.join(frames_dir, "frame_%06d.png")]


def run_encode(job: EncoderJob, frames_dir: str | None = None) -> dict:
    """Encode, then optionally dump decoded frames for ingestion."""
    binary = resolve_encoder()
    result = subprocess.run(
        [binary, *encode_args(job)], capture_output=True, text=True
    )
    if result.returncode != 0:
        raise EncoderFailedError(
            f"encoder exited with status {result.returncode}", log=result.stderr
        )
    info = {"video": job.output_path}
    if frames_dir is not None:
        os.makedirs(frames_dir, exist_ok=True)
        result = subprocess.run(
            [binary, *decode_args(job.output_path, frames_dir)],
            capture_output=True,
            text=True,
        )
        if result.returncode != 0:
            raise EncoderFailedError(
                f"frame dump exited with status {result.returncode}", log=result.stderr
            )
        info["frames"] = sorted(
            os.path.join(frames_dir, f)
            for f in os.listdir(frames_dir)
            if f.endswith(".png")
        )
    return info
