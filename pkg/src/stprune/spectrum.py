"""Zero-padded 3-D DFT of the luma volume.

Convention: the forward transform is unnormalized (``S[0,0,0]`` is the sum of
all samples) and the inverse carries the full ``1/N`` factor. Every axis is
zero-padded at its end to the next power of two.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .video_io import VideoVolume

__all__ = [
    "DEFAULT_MAX_COEFFICIENTS",
    "BrokenSymmetryError",
    "MemoryBudgetError",
    "Spectrum3D",
    "next_pow2",
    "padded_dims",
    "forward_fft",
    "forward_fft_array",
    "inverse_fft",
    "spectral_energy",
    "hermitian_partner",
    "dump_magnitude_slice",
]

DEFAULT_MAX_COEFFICIENTS = 2**30
IMAG_TOLERANCE = 1e-6
DYNAMIC_RANGE = 255.0


class MemoryBudgetError(MemoryError):
    """The padded transform would exceed the configured coefficient budget."""


class BrokenSymmetryError(ArithmeticError):
    """Inverse transform produced a non-negligible imaginary part."""


def next_pow2(n: int) -> int:
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    return 1 << (int(n) - 1).bit_length()


def padded_dims(shape) -> tuple[int, int, int]:
    return tuple(next_pow2(n) for n in shape)


@dataclass(frozen=True, eq=False)
class Spectrum3D:
    """Complex coefficients ``(N_temp, N_ver, N_hor)`` plus the unpadded shape."""

    coefficients: np.ndarray
    orig_dims: tuple[int, int, int]
    f_frame: float

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients)
        if coeffs.ndim != 3:
            raise ValueError(f"coefficients must be 3-D, got shape {coeffs.shape}")
        if coeffs.dtype != np.complex128:
            coeffs = coeffs.astype(np.complex128)
        coeffs = coeffs.view()
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "orig_dims", tuple(int(n) for n in self.orig_dims))
        if coeffs.shape != padded_dims(self.orig_dims):
            raise ValueError(
                f"coefficient shape {coeffs.shape} is not the power-of-two padding of {self.orig_dims}"
            )

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.coefficients.shape

    @property
    def n_temp(self) -> int:
        return self.shape[0]

    @property
    def n_ver(self) -> int:
        return self.shape[1]

    @property
    def n_hor(self) -> int:
        return self.shape[2]

    @property
    def size(self) -> int:
        return self.coefficients.size

    def with_coefficients(self, coefficients) -> "Spectrum3D":
        return Spectrum3D(coefficients, self.orig_dims, self.f_frame)


def _luma_of(v) -> tuple[np.ndarray, float]:
    if isinstance(v, VideoVolume):
        return v.luma, v.frame_rate
    raise TypeError(f"expected VideoVolume, got {type(v).__name__}")


def forward_fft(v: VideoVolume, max_coefficients: int = DEFAULT_MAX_COEFFICIENTS) -> Spectrum3D:
    luma, fps = _luma_of(v)
    return forward_fft_array(luma, fps, max_coefficients)


def forward_fft_array(luma, f_frame: float, max_coefficients: int = DEFAULT_MAX_COEFFICIENTS) -> Spectrum3D:
    luma = np.asarray(luma)
    if luma.ndim != 3:
        raise ValueError(f"luma must be 3-D, got shape {luma.shape}")
    dims = padded_dims(luma.shape)
    total = dims[0] * dims[1] * dims[2]
    if total > max_coefficients:
        raise MemoryBudgetError(
            f"padded FFT {dims[2]}x{dims[1]}x{dims[0]} needs {total} complex coefficients "
            f"(~{total * 16 / 2**30:.1f} GiB), budget is {max_coefficients}"
        )
    coeffs = np.fft.fftn(luma.astype(np.float64), s=dims, axes=(0, 1, 2))
    return Spectrum3D(coeffs, luma.shape, float(f_frame))


def inverse_fft(sp: Spectrum3D) -> np.ndarray:
    """Inverse transform, crop to the original shape, round and clamp to uint8.

    Raises ``BrokenSymmetryError`` if the imaginary residual exceeds
    ``1e-6`` of the 8-bit dynamic range, which only happens when the
    spectrum was edited without respecting conjugate symmetry.
    """
    full = np.fft.ifftn(sp.coefficients)
    t, h, w = sp.orig_dims
    full = full[:t, :h, :w]
    residual = float(np.abs(full.imag).max())
    if residual > IMAG_TOLERANCE * DYNAMIC_RANGE:
        raise BrokenSymmetryError(
            f"imaginary residual {residual:.3g} after inverse FFT; spectrum is not conjugate-symmetric"
        )
    return np.clip(np.rint(full.real), 0, 255).astype(np.uint8)


def spectral_energy(sp: Spectrum3D) -> float:
    c = sp.coefficients
    return float(np.sum(c.real**2 + c.imag**2))


def hermitian_partner(a: np.ndarray) -> np.ndarray:
    """Return ``b`` with ``b[k] = a[-k mod N]`` along every axis."""
    return np.roll(np.flip(a), shift=1, axis=tuple(range(a.ndim)))


def dump_magnitude_slice(sp: Spectrum3D, path, w: int = 0) -> int:
    """Write ``|S[w, :, :]|`` as CSV rows ``w,u_ver,u_hor,magnitude``.

    Returns the number of rows written.
    """
    if not 0 <= w < sp.n_temp:
        raise IndexError(f"temporal index {w} outside [0, {sp.n_temp})")
    mag = np.abs(sp.coefficients[w])
    rows = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w", "u_ver", "u_hor", "magnitude"])
        for u_ver in range(mag.shape[0]):
            for u_hor in range(mag.shape[1]):
                writer.writerow([w, u_ver, u_hor, repr(float(mag[u_ver, u_hor]))])
                rows += 1
    return rows
