"""Frame-rate reduction by averaging groups of consecutive frames."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .video_io import VideoVolume

logger = logging.getLogger(__name__)

__all__ = ["DownscaleSpec", "downscale_temporal", "average_frames"]

STANDARD_FACTORS = (1, 2, 4)


@dataclass(frozen=True)
class DownscaleSpec:
    factor: int
    allow_any_factor: bool = False

    def __post_init__(self):
        if isinstance(self.factor, bool) or int(self.factor) != self.factor:
            raise ValueError(f"downscale factor must be an integer, got {self.factor!r}")
        if self.factor <= 0:
            raise ValueError(f"downscale factor must be >= 1, got {self.factor}")
        if self.factor not in STANDARD_FACTORS and not self.allow_any_factor:
            raise ValueError(
                f"factor {self.factor} is not one of {STANDARD_FACTORS}; set allow_any_factor to use it"
            )


def average_frames(plane: np.ndarray, factor: int) -> np.ndarray:
    """Average ``factor`` consecutive frames per output frame, rounding half up.

    Trailing frames that do not fill a whole group are dropped.
    """
    n_out = plane.shape[0] // factor
    groups = plane[: n_out * factor].reshape(n_out, factor, *plane.shape[1:])
    sums = groups.sum(axis=1, dtype=np.int64)
    # floor(sum / factor + 1/2) in exact integer arithmetic
    return ((2 * sums + factor) // (2 * factor)).astype(plane.dtype)


def downscale_temporal(v: VideoVolume, spec: DownscaleSpec | int) -> VideoVolume:
    if not isinstance(spec, DownscaleSpec):
        spec = DownscaleSpec(spec)
    factor = int(spec.factor)
    if factor > v.frame_count:
        raise ValueError(f"factor {factor} exceeds frame count {v.frame_count}")
    if factor == 1:
        return v
    remainder = v.frame_count % factor
    if remainder:
        logger.warning(
            "dropping %d trailing frame(s): %d frames is not a multiple of %d",
            remainder,
            v.frame_count,
            factor,
        )
    return VideoVolume(
        average_frames(v.luma, factor),
        average_frames(v.chroma_cb, factor),
        average_frames(v.chroma_cr, factor),
        v.frame_rate / factor,
        v.bit_depth,
    )
