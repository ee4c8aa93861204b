"""Removal of spectral components that fall below the scaled visibility threshold.

The pipeline is FFT -> binary mask -> entry-wise product -> IFFT on luma;
chroma passes through untouched.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .csf import DEFAULT_MODEL, CsfModel, sensitivity_grid
from .spectrum import (
    DEFAULT_MAX_COEFFICIENTS,
    Spectrum3D,
    forward_fft,
    hermitian_partner,
    inverse_fft,
    spectral_energy,
)
from .video_io import VideoVolume

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_BETAS",
    "VisibilityMask",
    "build_mask",
    "apply_mask",
    "filter_video",
    "mask_stats",
    "write_mask_stats",
]

DEFAULT_BETAS = (0.0, 0.01, 0.05, 0.2)


@dataclass(frozen=True, eq=False)
class VisibilityMask:
    bits: np.ndarray
    beta: float

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool).view()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def kept_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def total_count(self) -> int:
        return int(self.bits.size)

    @property
    def kept_fraction(self) -> float:
        return self.kept_count / self.total_count


def _reference_mean(sp: Spectrum3D) -> float:
    # zero padding leaves the DC term equal to the sum of the original samples
    return float(sp.coefficients[0, 0, 0].real) / float(np.prod(sp.orig_dims))


def build_mask(
    sp: Spectrum3D,
    model: CsfModel = DEFAULT_MODEL,
    beta: float = 0.0,
    normalize: bool = False,
    s_mean: float | None = None,
) -> VisibilityMask:
    """Keep coefficients whose magnitude exceeds ``beta * gamma(f_st)``.

    With ``normalize=True`` the magnitude is first divided by
    ``s_mean * N_pad`` so it reads as a contrast. ``s_mean`` defaults to the
    mean luma of the unpadded input, recovered from the DC term.
    The DC coefficient is always kept and the mask is made conjugate
    symmetric by keeping a coefficient when either partner passes.
    """
    if not beta >= 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    magnitude = np.abs(sp.coefficients)
    if normalize:
        if s_mean is None:
            s_mean = _reference_mean(sp)
        if s_mean <= 0:
            raise ValueError("normalized thresholding needs a positive mean luminance")
        magnitude = magnitude / (s_mean * sp.size)
    threshold = beta * sensitivity_grid(model, sp.shape, sp.f_frame)
    bits = magnitude > threshold
    bits |= hermitian_partner(bits)
    bits[0, 0, 0] = True
    return VisibilityMask(bits, float(beta))


def apply_mask(sp: Spectrum3D, m: VisibilityMask) -> Spectrum3D:
    if m.bits.shape != sp.shape:
        raise ValueError(f"mask shape {m.bits.shape} does not match spectrum shape {sp.shape}")
    return sp.with_coefficients(np.where(m.bits, sp.coefficients, 0))


def filter_video(
    v: VideoVolume,
    model: CsfModel = DEFAULT_MODEL,
    beta: float = 0.0,
    normalize: bool = False,
    max_coefficients: int = DEFAULT_MAX_COEFFICIENTS,
    spectrum: Spectrum3D | None = None,
    s_mean: float | None = None,
) -> VideoVolume:
    """Filter the luma of ``v`` and return a new volume.

    Pass a precomputed ``spectrum`` (from ``forward_fft(v)``) to reuse one
    transform across several ``beta`` values.
    """
    sp = spectrum if spectrum is not None else forward_fft(v, max_coefficients)
    mask = build_mask(sp, model, beta, normalize, s_mean)
    logger.debug("beta=%g kept %d/%d coefficients", beta, mask.kept_count, mask.total_count)
    luma = inverse_fft(apply_mask(sp, mask))
    return v.with_luma(luma)


def mask_stats(sp: Spectrum3D, m: VisibilityMask) -> dict:
    total_energy = spectral_energy(sp)
    kept_energy = spectral_energy(apply_mask(sp, m))
    return {
        "beta": m.beta,
        "kept_count": m.kept_count,
        "total_count": m.total_count,
        "kept_energy_fraction": kept_energy / total_energy if total_energy > 0 else 1.0,
    }


def write_mask_stats(rows, path) -> None:
    fields = ["beta", "kept_count", "total_count", "kept_energy_fraction"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fields})
