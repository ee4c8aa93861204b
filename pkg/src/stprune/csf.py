"""Spatiotemporal contrast sensitivity and FFT-grid frequency conversion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CsfModel",
    "DEFAULT_MODEL",
    "st_frequency",
    "sensitivity",
    "signed_index",
    "grid_to_physical",
    "frequency_grid",
    "sensitivity_grid",
    "csf_table",
]


@dataclass(frozen=True)
class CsfModel:
    """Parameters of the sech-difference contrast sensitivity surface.

    ``gamma_dvd`` converts cycles per pixel into cycles per degree under the
    designed-viewing-distance assumption (one pixel spans one arcminute).
    """

    f0: float = 4.1726
    f1: float = 1.3625
    alpha: float = 0.8493
    p: float = 0.7786
    g: float = 373.08
    gamma_dvd: float = 60.0

    def __post_init__(self):
        for name in ("f0", "f1", "alpha", "p", "g", "gamma_dvd"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"CsfModel.{name} must be finite and > 0, got {value}")
        if self.alpha >= 1:
            raise ValueError(f"CsfModel.alpha must be < 1 so DC stays visible, got {self.alpha}")

    def __call__(self, f_st):
        return sensitivity(self, f_st)


DEFAULT_MODEL = CsfModel()


def st_frequency(f_hor, f_ver, f_temp):
    """Euclidean norm of (cpd, cpd, Hz), with units deliberately mixed."""
    if np.ndim(f_hor) == np.ndim(f_ver) == np.ndim(f_temp) == 0:
        return math.sqrt(f_hor * f_hor + f_ver * f_ver + f_temp * f_temp)
    return np.sqrt(np.square(f_hor) + np.square(f_ver) + np.square(f_temp))


def _sech(x):
    # 1/cosh overflows to inf for x > ~710; the limit is 0
    with np.errstate(over="ignore"):
        return 1.0 / np.cosh(x)


def sensitivity(model: CsfModel, f_st):
    """Contrast sensitivity ``g * (sech((f/f0)^p) - alpha * sech(f/f1))``.

    Accepts scalars or arrays. Negative inputs are rejected; the result is
    clamped at zero, which never triggers for ``alpha < 1``.
    """
    f = np.asarray(f_st, dtype=np.float64)
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise ValueError("spatiotemporal frequency must be finite and >= 0")
    gamma = model.g * (_sech((f / model.f0) ** model.p) - model.alpha * _sech(f / model.f1))
    gamma = np.maximum(gamma, 0.0)
    if gamma.ndim == 0:
        return float(gamma)
    return gamma


def signed_index(k, n: int):
    """Map raw DFT index ``k`` on an axis of length ``n`` to its signed alias."""
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k >= n):
        raise IndexError(f"index outside [0, {n - 1}]")
    signed = np.where(k < n / 2, k, k - n)
    if signed.ndim == 0:
        return int(signed)
    return signed


def grid_to_physical(u_hor, u_ver, w, sp_dims, f_frame: float, gamma_dvd: float = DEFAULT_MODEL.gamma_dvd):
    """Convert DFT indices to ``(f_hor [cpd], f_ver [cpd], f_temp [Hz])``.

    ``sp_dims`` is ``(N_hor, N_ver, N_temp)``. Indices in the upper half of an
    axis are negative frequencies, so a coefficient and its conjugate
    partner map to the same magnitudes.
    """
    n_hor, n_ver, n_temp = sp_dims
    f_hor = signed_index(u_hor, n_hor) * gamma_dvd / n_hor
    f_ver = signed_index(u_ver, n_ver) * gamma_dvd / n_ver
    f_temp = signed_index(w, n_temp) * f_frame / n_temp
    return f_hor, f_ver, f_temp


def _axis_freqs(n: int, scale: float) -> np.ndarray:
    return signed_index(np.arange(n), n) * scale / n


def frequency_grid(shape, f_frame: float, gamma_dvd: float = DEFAULT_MODEL.gamma_dvd) -> np.ndarray:
    """``f_st`` for every coefficient of a ``(N_temp, N_ver, N_hor)`` spectrum."""
    n_temp, n_ver, n_hor = shape
    ft = _axis_freqs(n_temp, f_frame)[:, None, None]
    fv = _axis_freqs(n_ver, gamma_dvd)[None, :, None]
    fh = _axis_freqs(n_hor, gamma_dvd)[None, None, :]
    return np.sqrt(ft**2 + fv**2 + fh**2)


def sensitivity_grid(model: CsfModel, shape, f_frame: float) -> np.ndarray:
    return sensitivity(model, frequency_grid(shape, f_frame, model.gamma_dvd))


def csf_table(model: CsfModel, direction=(1.0, 0.0, 0.0), f_max: float = 100.0, step: float = 0.5):
    """Sample the surface along a ray through the origin.

    ``direction`` is ``(hor, ver, temp)`` and is normalized; rows are
    ``(f_hor, f_ver, f_temp, f_st, gamma)``.
    """
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d)
    if d.shape != (3,) or norm == 0:
        raise ValueError("direction must be a non-zero 3-vector")
    if step <= 0 or f_max < 0:
        raise ValueError("need step > 0 and f_max >= 0")
    d = d / norm
    f_st = np.arange(0.0, f_max + step / 2, step)
    gamma = sensitivity(model, f_st)
    return [
        (float(s * d[0]), float(s * d[1]), float(s * d[2]), float(s), float(gv))
        for s, gv in zip(f_st, np.atleast_1d(gamma))
    ]
