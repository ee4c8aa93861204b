"""Raw I420 and YUV4MPEG2 video I/O.

Only 8-bit 4:2:0 material is supported. Raw ``.yuv`` files are planar I420:
for every frame, all Y samples, then all Cb samples, then all Cr samples,
each plane stored row-major.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "VideoFormatError",
    "VideoVolume",
    "read_video",
    "write_video",
    "mean_luma",
    "global_contrast",
    "infer_format",
]

Y4M_MAGIC = b"YUV4MPEG2"
_Y4M_420_TAGS = {"420", "420jpeg", "420paldv", "420mpeg2"}


class VideoFormatError(ValueError):
    """Malformed, truncated or unsupported video data."""


def chroma_shape(height: int, width: int) -> tuple[int, int]:
    return (height + 1) // 2, (width + 1) // 2


def frame_nbytes(width: int, height: int) -> int:
    ch, cw = chroma_shape(height, width)
    return width * height + 2 * ch * cw


@dataclass(frozen=True, eq=False)
class VideoVolume:
    """A decoded 8-bit 4:2:0 clip.

    Planes are ``uint8`` arrays shaped ``(frames, rows, cols)``. The arrays
    are made read-only on construction so instances can be shared freely.
    """

    luma: np.ndarray
    chroma_cb: np.ndarray
    chroma_cr: np.ndarray
    frame_rate: float
    bit_depth: int = 8

    def __post_init__(self):
        if self.bit_depth != 8:
            raise VideoFormatError(f"only 8-bit video is supported, got {self.bit_depth}")
        if not (math.isfinite(self.frame_rate) and self.frame_rate > 0):
            raise VideoFormatError(f"frame rate must be positive, got {self.frame_rate}")
        planes = {}
        for name in ("luma", "chroma_cb", "chroma_cr"):
            arr = np.asarray(getattr(self, name))
            if arr.ndim != 3:
                raise VideoFormatError(f"{name} must be 3-D (frames, rows, cols), got shape {arr.shape}")
            if arr.dtype != np.uint8:
                if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255):
                    raise VideoFormatError(f"{name} samples outside [0, 255]")
                if arr.size and not np.array_equal(arr, np.round(arr)):
                    raise VideoFormatError(f"{name} samples must be integers")
                arr = arr.astype(np.uint8)
            arr = np.array(arr, copy=True)
            arr.setflags(write=False)
            planes[name] = arr
        t, h, w = planes["luma"].shape
        if t == 0:
            raise VideoFormatError("video has no frames")
        if h == 0 or w == 0:
            raise VideoFormatError("video has empty frames")
        expected = (t, *chroma_shape(h, w))
        for name in ("chroma_cb", "chroma_cr"):
            if planes[name].shape != expected:
                raise VideoFormatError(
                    f"{name} shape {planes[name].shape} does not match 4:2:0 layout {expected}"
                )
        for name, arr in planes.items():
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "frame_rate", float(self.frame_rate))

    @property
    def frame_count(self) -> int:
        return self.luma.shape[0]

    @property
    def height(self) -> int:
        return self.luma.shape[1]

    @property
    def width(self) -> int:
        return self.luma.shape[2]

    @classmethod
    def from_luma(cls, luma, frame_rate: float, chroma_value: int = 128) -> "VideoVolume":
        """Build a volume from a luma array with flat (neutral) chroma."""
        luma = np.asarray(luma)
        t, h, w = luma.shape
        ch, cw = chroma_shape(h, w)
        flat = np.full((t, ch, cw), chroma_value, dtype=np.uint8)
        return cls(luma, flat, flat.copy(), frame_rate)

    def with_luma(self, luma) -> "VideoVolume":
        return VideoVolume(luma, self.chroma_cb, self.chroma_cr, self.frame_rate, self.bit_depth)

    def __eq__(self, other):
        if not isinstance(other, VideoVolume):
            return NotImplemented
        return (
            self.frame_rate == other.frame_rate
            and self.bit_depth == other.bit_depth
            and np.array_equal(self.luma, other.luma)
            and np.array_equal(self.chroma_cb, other.chroma_cb)
            and np.array_equal(self.chroma_cr, other.chroma_cr)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"VideoVolume({self.width}x{self.height}, frames={self.frame_count}, "
            f"fps={self.frame_rate:g})"
        )


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".y4m":
        return "y4m"
    if suffix in (".yuv", ".raw", ".i420"):
        return "raw-yuv"
    raise VideoFormatError(f"cannot infer video format from {path!r}; pass format explicitly")


def _split_frames(buf: bytes, count: int, width: int, height: int):
    ch, cw = chroma_shape(height, width)
    data = np.frombuffer(buf, dtype=np.uint8).reshape(count, -1)
    ny = width * height
    nc = ch * cw
    luma = data[:, :ny].reshape(count, height, width)
    cb = data[:, ny : ny + nc].reshape(count, ch, cw)
    cr = data[:, ny + nc :].reshape(count, ch, cw)
    return luma, cb, cr


def _read_raw(path, width, height, fps) -> VideoVolume:
    if width is None or height is None or fps is None:
        raise VideoFormatError("raw-yuv input needs width, height and fps")
    width, height = int(width), int(height)
    if width <= 0 or height <= 0:
        raise VideoFormatError(f"invalid dimensions {width}x{height}")
    buf = Path(path).read_bytes()
    per_frame = frame_nbytes(width, height)
    count, rest = divmod(len(buf), per_frame)
    if rest:
        raise VideoFormatError(
            f"{path}: {len(buf)} bytes is not a whole number of {width}x{height} "
            f"I420 frames ({per_frame} bytes each); trailing frame is truncated"
        )
    if count == 0:
        raise VideoFormatError(f"{path}: file is empty")
    luma, cb, cr = _split_frames(buf, count, width, height)
    return VideoVolume(luma, cb, cr, float(fps))


def _parse_y4m_header(line: bytes, path) -> tuple[int, int, float]:
    try:
        tokens = line.decode("ascii").split()
    except UnicodeDecodeError as exc:
        raise VideoFormatError(f"{path}: header is not ASCII") from exc
    if not tokens or tokens[0] != "YUV4MPEG2":
        raise VideoFormatError(f"{path}: missing YUV4MPEG2 signature")
    width = height = None
    fps = None
    colorspace = "420jpeg"
    for tok in tokens[1:]:
        key, val = tok[0], tok[1:]
        try:
            if key == "W":
                width = int(val)
            elif key == "H":
                height = int(val)
            elif key == "F":
                num, den = val.split(":")
                fps = Fraction(int(num), int(den))
            elif key == "C":
                colorspace = val
            elif key == "I":
                if val != "p":
                    logger.warning("%s: interlacing mode %r ignored, treating as progressive", path, val)
            elif key == "A":
                pass
            elif key == "X":
                logger.warning("%s: extension token %r ignored", path, tok)
            else:
                raise VideoFormatError(f"{path}: unknown header token {tok!r}")
        except (ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, VideoFormatError):
                raise
            raise VideoFormatError(f"{path}: malformed header token {tok!r}") from exc
    if width is None or height is None or width <= 0 or height <= 0:
        raise VideoFormatError(f"{path}: header lacks valid W/H")
    if fps is None or fps <= 0:
        raise VideoFormatError(f"{path}: header lacks a valid F (frame rate)")
    if colorspace not in _Y4M_420_TAGS:
        raise VideoFormatError(f"{path}: unsupported colorspace C{colorspace} (8-bit 4:2:0 only)")
    return width, height, float(fps)


def _read_y4m(path) -> VideoVolume:
    buf = Path(path).read_bytes()
    nl = buf.find(b"\n")
    if nl < 0:
        raise VideoFormatError(f"{path}: missing header terminator")
    width, height, fps = _parse_y4m_header(buf[:nl], path)
    per_frame = frame_nbytes(width, height)
    frames = []
    pos = nl + 1
    while pos < len(buf):
        end = buf.find(b"\n", pos)
        if end < 0 or not buf.startswith(b"FRAME", pos):
            raise VideoFormatError(f"{path}: expected FRAME marker at byte {pos}")
        pos = end + 1
        if pos + per_frame > len(buf):
            raise VideoFormatError(
                f"{path}: frame {len(frames)} truncated ({len(buf) - pos} of {per_frame} bytes)"
            )
        frames.append(buf[pos : pos + per_frame])
        pos += per_frame
    if not frames:
        raise VideoFormatError(f"{path}: no frames")
    luma, cb, cr = _split_frames(b"".join(frames), len(frames), width, height)
    return VideoVolume(luma, cb, cr, fps)


def read_video(path, format: str | None = None, width=None, height=None, fps=None) -> VideoVolume:
    """Read an 8-bit 4:2:0 clip.

    ``format`` is ``"raw-yuv"`` or ``"y4m"``; when omitted it is inferred from
    the file extension. Raw files need ``width``, ``height`` and ``fps``.
    A partial trailing frame is an error, never silently dropped.
    """
    format = format or infer_format(path)
    if format == "y4m":
        return _read_y4m(path)
    if format == "raw-yuv":
        return _read_raw(path, width, height, fps)
    raise VideoFormatError(f"unknown video format {format!r}")


def _fps_token(fps: float) -> str:
    frac = Fraction(fps).limit_denominator(1001000)
    return f"F{frac.numerator}:{frac.denominator}"


def write_video(v: VideoVolume, path, format: str | None = None) -> None:
    if not isinstance(v, VideoVolume):
        raise TypeError(f"expected VideoVolume, got {type(v).__name__}")
    format = format or infer_format(path)
    if format not in ("raw-yuv", "y4m"):
        raise VideoFormatError(f"unknown video format {format!r}")
    tmp = Path(f"{path}.part")
    with open(tmp, "wb") as fh:
        if format == "y4m":
            fh.write(
                f"YUV4MPEG2 W{v.width} H{v.height} {_fps_token(v.frame_rate)} Ip A1:1 C420jpeg\n".encode(
                    "ascii"
                )
            )
        for i in range(v.frame_count):
            if format == "y4m":
                fh.write(b"FRAME\n")
            fh.write(v.luma[i].tobytes())
            fh.write(v.chroma_cb[i].tobytes())
            fh.write(v.chroma_cr[i].tobytes())
    os.replace(tmp, path)


def mean_luma(v: VideoVolume) -> float:
    return float(v.luma.mean(dtype=np.float64))


def global_contrast(v: VideoVolume) -> float:
    """Luminance range over mean luminance, taken over the whole clip."""
    s_mean = mean_luma(v)
    if s_mean <= 0:
        raise ValueError("contrast is undefined for a video with zero mean luminance")
    return (int(v.luma.max()) - int(v.luma.min())) / s_mean
