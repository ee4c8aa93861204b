"""Contrast-sensitivity-driven spectral pre-filtering, frame averaging and
Bjontegaard-Delta evaluation for energy-aware video coding experiments."""

__version__ = "0.1.0"

from .bd import (
    AkimaInterpolant,
    BdResult,
    RdCurve,
    RdPoint,
    aggregate_bd,
    akima_interpolant,
    bd_delta,
)
from .csf import CsfModel, DEFAULT_MODEL, grid_to_physical, sensitivity, st_frequency
from .estimators import FrameAverager, SpectralPruner
from .harness import EnergySamples, ExperimentConfig, check_validity, collect_results, load_config, run_pipeline
from .pruning import VisibilityMask, apply_mask, build_mask, filter_video
from .spectrum import Spectrum3D, forward_fft, inverse_fft, spectral_energy
from .temporal import DownscaleSpec, downscale_temporal
from .video_io import VideoVolume, global_contrast, mean_luma, read_video, write_video

__all__ = [
    "AkimaInterpolant",
    "BdResult",
    "CsfModel",
    "DEFAULT_MODEL",
    "DownscaleSpec",
    "EnergySamples",
    "ExperimentConfig",
    "FrameAverager",
    "RdCurve",
    "RdPoint",
    "SpectralPruner",
    "Spectrum3D",
    "VideoVolume",
    "VisibilityMask",
    "aggregate_bd",
    "akima_interpolant",
    "apply_mask",
    "bd_delta",
    "build_mask",
    "check_validity",
    "collect_results",
    "downscale_temporal",
    "filter_video",
    "forward_fft",
    "global_contrast",
    "grid_to_physical",
    "inverse_fft",
    "load_config",
    "mean_luma",
    "read_video",
    "run_pipeline",
    "sensitivity",
    "spectral_energy",
    "st_frequency",
    "write_video",
]
