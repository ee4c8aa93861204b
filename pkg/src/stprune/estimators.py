"""scikit-learn style wrappers so the filters compose with ``Pipeline``.

Both transformers accept either a :class:`VideoVolume` or a bare
``(frames, rows, cols)`` luma array and return the same kind they were given.
Bare arrays need ``frame_rate`` to be set on the estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .csf import DEFAULT_MODEL
from .pruning import filter_video
from .spectrum import DEFAULT_MAX_COEFFICIENTS, forward_fft, padded_dims
from .temporal import DownscaleSpec, downscale_temporal
from .video_io import VideoVolume, mean_luma

__all__ = ["check_volume", "SpectralPruner", "FrameAverager"]


def check_volume(X, frame_rate=None) -> tuple[VideoVolume, bool]:
    """Coerce ``X`` to a VideoVolume; second item says whether it was one already."""
    if isinstance(X, VideoVolume):
        return X, True
    arr = np.asarray(X)
    if arr.ndim != 3:
        raise ValueError(
            f"expected a VideoVolume or a 3-D (frames, rows, cols) luma array, got shape {arr.shape}"
        )
    if frame_rate is None:
        raise ValueError("frame_rate must be set to transform bare luma arrays")
    return VideoVolume.from_luma(arr, frame_rate), False


def _unwrap(v: VideoVolume, was_volume: bool):
    return v if was_volume else np.array(v.luma)


class SpectralPruner(TransformerMixin, BaseEstimator):
    """Drop spectral components below ``beta`` times the contrast sensitivity.

    ``fit`` records the reference mean luminance (used when ``normalize`` is
    on) and the padded transform shape; ``transform`` filters luma.

    Parameters
    ----------
    beta : float
        Threshold scale; ``0`` leaves the input untouched.
    model : CsfModel
    normalize : bool
        Compare ``|S| / (mean * N)`` instead of raw ``|S|``.
    frame_rate : float, optional
        Needed only for bare arrays.
    max_coefficients : int
        Memory cap on the padded transform size.
    """

    def __init__(
        self,
        beta=0.0,
        model=DEFAULT_MODEL,
        normalize=False,
        frame_rate=None,
        max_coefficients=DEFAULT_MAX_COEFFICIENTS,
    ):
        self.beta = beta
        self.model = model
        self.normalize = normalize
        self.frame_rate = frame_rate
        self.max_coefficients = max_coefficients

    def fit(self, X, y=None):
        v, _ = check_volume(X, self.frame_rate)
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        self.mean_luma_ = mean_luma(v)
        self.spectrum_shape_ = padded_dims(v.luma.shape)
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_luma_")
        v, was_volume = check_volume(X, self.frame_rate)
        sp = forward_fft(v, self.max_coefficients)
        out = filter_video(
            v, self.model, self.beta, self.normalize, spectrum=sp, s_mean=self.mean_luma_
        )
        return _unwrap(out, was_volume)


class FrameAverager(TransformerMixin, BaseEstimator):
    """Reduce the frame rate by averaging ``factor`` consecutive frames."""

    def __init__(self, factor=2, allow_any_factor=False, frame_rate=None):
        self.factor = factor
        self.allow_any_factor = allow_any_factor
        self.frame_rate = frame_rate

    def fit(self, X, y=None):
        self.spec_ = DownscaleSpec(self.factor, self.allow_any_factor)
        v, _ = check_volume(X, self.frame_rate if self.frame_rate is not None else 1.0)
        self.output_frame_rate_ = v.frame_rate / self.factor
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        v, was_volume = check_volume(X, self.frame_rate if self.frame_rate is not None else 1.0)
        return _unwrap(downscale_temporal(v, self.spec_), was_volume)
