"""End-to-end experiment driver: filter -> downscale -> encode -> decode -> collect.

Configuration is a flat ``key = value`` file; ``#`` starts a comment and
list values are comma-separated::

    videos        = clips/bobblehead.y4m, clips/raw.yuv:910x512@120
    betas         = 0, 0.01, 0.05, 0.2
    factors       = 1, 2, 4
    crfs          = 18, 23, 28, 33, 38
    encoder       = x265 --preset medium --input {input} --crf {crf} -o {output}
    decoder       = measure-energy --append {energy_log} -- openHEVC -i {input} -o /dev/null
    energy_log    = {bitstream}.energy
    output_dir    = runs/hfr
    quality_csv   = runs/hfr/quality.csv
    min_repetitions = 5
    max_repetitions = 30
    ci_rel_width  = 0.02
    ci_confidence = 0.95
    workers       = 1

Encoder placeholders: ``{input} {output} {crf} {width} {height} {fps}
{frames}``. Decoder placeholders: ``{input} {energy_log} {rep}``. Commands run
with the output directory as working directory and all generated paths are
relative to it, so a run is relocatable.

Every decode repetition is expected to append one joule value to the energy
log. Decoding for energy measurement should use ``workers = 1``; concurrent
decodes make per-process energy attribution meaningless.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import re
import shlex
import string
import subprocess
import threading
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .bd import RdCurve, RdPoint
from .csf import DEFAULT_MODEL, CsfModel
from .pruning import filter_video
from .spectrum import DEFAULT_MAX_COEFFICIENTS, forward_fft
from .temporal import DownscaleSpec, downscale_temporal
from .video_io import read_video, write_video

logger = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "JoinError",
    "InvalidEnergyError",
    "VideoSpec",
    "ExperimentConfig",
    "EnergySamples",
    "Validity",
    "TupleKey",
    "load_config",
    "parse_config",
    "check_validity",
    "plan",
    "run_pipeline",
    "collect_results",
    "RESULT_COLUMNS",
]

MANIFEST_NAME = "manifest.json"
RESULTS_NAME = "results.csv"

RESULT_COLUMNS = [
    "label",
    "video",
    "beta",
    "factor",
    "crf",
    "fps",
    "frame_count",
    "bitstream_bytes",
    "bitrate_bps",
    "energy_j",
    "energy_samples",
    "energy_rel_halfwidth",
    "energy_valid",
    "status",
    "config_hash",
    "encoder_cmd",
]


class ConfigError(ValueError):
    pass


class JoinError(ValueError):
    pass


class InvalidEnergyError(ValueError):
    pass


_VIDEO_RE = re.compile(r"^(?P<path>.+?):(?P<w>\d+)x(?P<h>\d+)@(?P<fps>[0-9.]+)$")


@dataclass(frozen=True)
class VideoSpec:
    path: str
    width: int | None = None
    height: int | None = None
    fps: float | None = None

    @property
    def name(self) -> str:
        return Path(self.path).stem

    @classmethod
    def parse(cls, text: str) -> "VideoSpec":
        text = text.strip()
        m = _VIDEO_RE.match(text)
        if m:
            return cls(m["path"], int(m["w"]), int(m["h"]), float(m["fps"]))
        return cls(text)

    def __str__(self):
        if self.width is None:
            return self.path
        return f"{self.path}:{self.width}x{self.height}@{self.fps:g}"

    def load(self):
        return read_video(self.path, width=self.width, height=self.height, fps=self.fps)


@dataclass
class ExperimentConfig:
    videos: list[VideoSpec]
    encoder: str
    decoder: str
    output_dir: Path
    betas: list[float] = field(default_factory=lambda: [0.0])
    factors: list[int] = field(default_factory=lambda: [1])
    crfs: list[int] = field(default_factory=lambda: [18, 23, 28, 33, 38])
    energy_log: str = "{bitstream}.energy"
    quality_csv: Path | None = None
    min_repetitions: int = 5
    max_repetitions: int = 30
    ci_rel_width: float = 0.02
    ci_confidence: float = 0.95
    workers: int = 1
    normalize: bool = False
    allow_any_factor: bool = False
    max_coefficients: int = DEFAULT_MAX_COEFFICIENTS
    csf: CsfModel = DEFAULT_MODEL

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if not self.videos:
            raise ConfigError("no input videos configured")
        if not self.crfs:
            raise ConfigError("crf list is empty")
        if not self.betas or any(not b >= 0 for b in self.betas):
            raise ConfigError(f"beta values must be >= 0, got {self.betas}")
        for f in self.factors:
            DownscaleSpec(f, self.allow_any_factor)
        _require_placeholders("encoder", self.encoder, ("input", "output", "crf"))
        _require_placeholders("decoder", self.decoder, ("input",))
        _require_placeholders("energy_log", self.energy_log, ("bitstream",))
        if not 2 <= self.min_repetitions <= self.max_repetitions:
            raise ConfigError("need 2 <= min_repetitions <= max_repetitions")
        if not 0 < self.ci_rel_width:
            raise ConfigError("ci_rel_width must be > 0")
        if not 0 < self.ci_confidence < 1:
            raise ConfigError("ci_confidence must be in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def config_hash(self) -> str:
        """Digest of the experimental parameters; excludes where outputs go."""
        payload = {
            "videos": [str(v) for v in self.videos],
            "betas": self.betas,
            "factors": self.factors,
            "crfs": self.crfs,
            "encoder": self.encoder,
            "decoder": self.decoder,
            "energy_log": self.energy_log,
            "min_repetitions": self.min_repetitions,
            "max_repetitions": self.max_repetitions,
            "ci_rel_width": self.ci_rel_width,
            "ci_confidence": self.ci_confidence,
            "normalize": self.normalize,
            "csf": [self.csf.f0, self.csf.f1, self.csf.alpha, self.csf.p, self.csf.g, self.csf.gamma_dvd],
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _require_placeholders(name: str, template: str, required) -> None:
    present = {f for _, f, _, _ in string.Formatter().parse(template) if f}
    missing = [p for p in required if p not in present]
    if missing:
        raise ConfigError(f"{name} template lacks placeholder(s) {', '.join('{' + p + '}' for p in missing)}")


_LIST_KEYS = {"videos": str, "betas": float, "factors": int, "crfs": int}
_SCALAR_KEYS = {
    "encoder": str,
    "decoder": str,
    "output_dir": str,
    "energy_log": str,
    "quality_csv": str,
    "min_repetitions": int,
    "max_repetitions": int,
    "ci_rel_width": float,
    "ci_confidence": float,
    "workers": int,
    "max_coefficients": int,
}
_BOOL_KEYS = {"normalize", "allow_any_factor"}
_CSF_KEYS = {"csf_f0": "f0", "csf_f1": "f1", "csf_alpha": "alpha", "csf_p": "p", "csf_g": "g", "gamma_dvd": "gamma_dvd"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text: str, base_dir=".") -> ExperimentConfig:
    """Parse a flat key-value config. Relative paths resolve against ``base_dir``."""
    base = Path(base_dir)
    kwargs: dict = {}
    csf_kwargs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _LIST_KEYS:
                conv = _LIST_KEYS[key]
                kwargs[key] = [conv(item.strip()) for item in value.split(",") if item.strip()]
            elif key in _SCALAR_KEYS:
                kwargs[key] = _SCALAR_KEYS[key](value)
            elif key in _BOOL_KEYS:
                kwargs[key] = _parse_bool(value)
            elif key in _CSF_KEYS:
                csf_kwargs[_CSF_KEYS[key]] = float(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    for key in ("videos", "encoder", "decoder", "output_dir"):
        if key not in kwargs:
            raise ConfigError(f"missing required key {key!r}")
    videos = []
    for text_spec in kwargs.pop("videos"):
        spec = VideoSpec.parse(text_spec)
        path = spec.path if os.path.isabs(spec.path) else str((base / spec.path).resolve())
        videos.append(VideoSpec(path, spec.width, spec.height, spec.fps))
    out = Path(kwargs.pop("output_dir"))
    if not out.is_absolute():
        out = base / out
    if "quality_csv" in kwargs:
        q = Path(kwargs["quality_csv"])
        kwargs["quality_csv"] = q if q.is_absolute() else base / q
    if csf_kwargs:
        kwargs["csf"] = CsfModel(**csf_kwargs)
    return ExperimentConfig(videos=videos, output_dir=out, **kwargs)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


# ---------------------------------------------------------------------------
# statistical validity of energy samples


@dataclass(frozen=True)
class EnergySamples:
    bitstream: str
    samples: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(float(s) for s in self.samples))
        if any(not (math.isfinite(s) and s > 0) for s in self.samples):
            raise ValueError(f"{self.bitstream}: energy samples must be > 0")


@dataclass(frozen=True)
class Validity:
    valid: bool
    mean: float
    half_width: float
    rel_half_width: float
    needed_more: int = 0


def check_validity(e, rel_width: float = 0.02, confidence: float = 0.95) -> Validity:
    """Two-sided Student-t confidence interval test on repeated measurements.

    Valid when the interval half-width relative to the mean is at most
    ``rel_width``. When invalid, ``needed_more`` estimates how many further
    samples bring the interval within bounds at the current spread.
    """
    samples = np.asarray(e.samples if isinstance(e, EnergySamples) else e, dtype=np.float64)
    n = samples.size
    if n < 2:
        raise ValueError(f"need at least 2 samples for a confidence interval, got {n}")
    mean = float(samples.mean())
    sd = float(samples.std(ddof=1))
    t = float(stats.t.ppf(0.5 + confidence / 2, n - 1))
    h = t * sd / math.sqrt(n)
    rel = h / mean
    if rel <= rel_width:
        return Validity(True, mean, h, rel)
    # iterate since t shrinks with n
    k = n
    while True:
        k += 1
        t_k = float(stats.t.ppf(0.5 + confidence / 2, k - 1))
        if t_k * sd / math.sqrt(k) / mean <= rel_width or k - n > 100000:
            break
    return Validity(False, mean, h, rel, k - n)


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True, order=True)
class TupleKey:
    video: str
    beta: float
    factor: int
    crf: int

    @property
    def id(self) -> str:
        return f"{self.video}|b{self.beta:g}|f{self.factor}|crf{self.crf}"

    @property
    def prepped_name(self) -> str:
        return f"prepped/{self.video}_b{self.beta:g}_f{self.factor}.y4m"

    @property
    def bitstream_name(self) -> str:
        return f"streams/{self.video}_b{self.beta:g}_f{self.factor}_crf{self.crf}.bin"


def _tuples(cfg: ExperimentConfig) -> list[TupleKey]:
    names = [v.name for v in cfg.videos]
    if len(set(names)) != len(names):
        raise ConfigError(f"input video names must be unique, got {names}")
    return sorted(
        TupleKey(v.name, float(b), int(f), int(c))
        for v in cfg.videos
        for b in cfg.betas
        for f in cfg.factors
        for c in cfg.crfs
    )


def _encoder_cmd(cfg, key: TupleKey, width, height, fps, frames) -> list[str]:
    return shlex.split(
        cfg.encoder.format(
            input=key.prepped_name,
            output=key.bitstream_name,
            crf=key.crf,
            width=width,
            height=height,
            fps=f"{fps:g}",
            frames=frames,
        )
    )


def _decoder_cmd(cfg, key: TupleKey, rep: int) -> list[str]:
    return shlex.split(
        cfg.decoder.format(input=key.bitstream_name, energy_log=_energy_log_name(cfg, key), rep=rep)
    )


def _energy_log_name(cfg, key: TupleKey) -> str:
    return cfg.energy_log.format(bitstream=key.bitstream_name)


def plan(cfg: ExperimentConfig) -> list[str]:
    """Human-readable command plan; input geometry is read from headers where needed."""
    lines = []
    geometry = {}
    for v in cfg.videos:
        try:
            clip = v.load()
            geometry[v.name] = (clip.width, clip.height, clip.frame_rate, clip.frame_count)
        except (OSError, ValueError):
            geometry[v.name] = (v.width or "?", v.height or "?", v.fps or 0.0, None)
    for key in _tuples(cfg):
        w, h, fps, frames = geometry[key.video]
        out_frames = frames // key.factor if isinstance(frames, int) else "?"
        lines.append(f"# {key.id}")
        lines.append(f"filter beta={key.beta:g} factor={key.factor} -> {key.prepped_name}")
        lines.append(shlex.join(_encoder_cmd(cfg, key, w, h, (fps or 0.0) / key.factor, out_frames)))
        for rep in range(cfg.min_repetitions):
            lines.append(shlex.join(_decoder_cmd(cfg, key, rep)))
        if cfg.max_repetitions > cfg.min_repetitions:
            lines.append(f"# ... up to {cfg.max_repetitions} decodes until the energy CI is valid")
    return lines


class _Manifest:
    """JSON record of per-tuple outcomes; writes are serialized through a lock."""

    def __init__(self, path: Path):
        self.path = path
        self.lock = threading.Lock()
        if path.exists():
            self.data = json.loads(path.read_text())
        else:
            self.data = {"config_hash": None, "tuples": {}}

    def done(self, key: TupleKey) -> bool:
        entry = self.data["tuples"].get(key.id)
        return bool(entry) and entry.get("status") == "done"

    def record(self, key: TupleKey, entry: dict) -> None:
        with self.lock:
            self.data["tuples"][key.id] = entry
            self._flush()

    def _flush(self) -> None:
        tmp = self.path.with_suffix(".json.part")
        tmp.write_text(json.dumps(self.data, indent=2, sort_keys=True))
        os.replace(tmp, self.path)


@dataclass
class RunReport:
    manifest_path: Path
    results_path: Path
    executed: int = 0
    skipped: int = 0
    failed: list[str] = field(default_factory=list)
    invocations: int = 0

    @property
    def exit_code(self) -> int:
        return 2 if self.failed else 0


class _Runner:
    def __init__(self, cfg: ExperimentConfig, manifest: _Manifest, config_hash: str):
        self.cfg = cfg
        self.manifest = manifest
        self.config_hash = config_hash
        self.invocations = 0
        self._count_lock = threading.Lock()

    def _run(self, cmd: list[str]) -> subprocess.CompletedProcess:
        with self._count_lock:
            self.invocations += 1
        return subprocess.run(cmd, cwd=self.cfg.output_dir, capture_output=True, text=True)

    def execute(self, key: TupleKey, prep: dict) -> dict:
        cfg = self.cfg
        out = cfg.output_dir
        entry = {
            "video": key.video,
            "beta": key.beta,
            "factor": key.factor,
            "crf": key.crf,
            "fps": prep["fps"],
            "frame_count": prep["frame_count"],
            "config_hash": self.config_hash,
        }
        enc = _encoder_cmd(cfg, key, prep["width"], prep["height"], prep["fps"], prep["frame_count"])
        entry["encoder_cmd"] = shlex.join(enc)
        bitstream = out / key.bitstream_name
        bitstream.parent.mkdir(parents=True, exist_ok=True)
        try:
            proc = self._run(enc)
        except OSError as exc:
            return {**entry, "status": "failed", "error": f"encoder could not start: {exc}"}
        if proc.returncode != 0:
            return {**entry, "status": "failed", "error": f"encoder exit {proc.returncode}: {proc.stderr[-500:]}"}
        if not bitstream.exists():
            return {**entry, "status": "failed", "error": f"encoder produced no {key.bitstream_name}"}
        nbytes = bitstream.stat().st_size
        entry["bitstream"] = key.bitstream_name
        entry["bitstream_bytes"] = nbytes
        entry["bitrate_bps"] = 8 * nbytes * prep["fps"] / prep["frame_count"]

        log_path = out / _energy_log_name(cfg, key)
        if log_path.exists():
            log_path.unlink()
        wall = []
        validity = None
        for rep in range(cfg.max_repetitions):
            cmd = _decoder_cmd(cfg, key, rep)
            start = time.perf_counter()
            try:
                proc = self._run(cmd)
            except OSError as exc:
                return {**entry, "status": "failed", "error": f"decoder could not start: {exc}"}
            wall.append(time.perf_counter() - start)
            if proc.returncode != 0:
                return {**entry, "status": "failed", "error": f"decoder exit {proc.returncode}: {proc.stderr[-500:]}"}
            if rep + 1 < cfg.min_repetitions:
                continue
            samples = _read_energy_log(log_path)
            if len(samples) < 2:
                # decoder wrapper logs no energy; keep timing only
                break
            validity = check_validity(samples, cfg.ci_rel_width, cfg.ci_confidence)
            if validity.valid:
                break
        samples = _read_energy_log(log_path)
        entry["decode_wall_s"] = wall
        entry["energy_samples"] = samples
        if validity is not None:
            entry["energy_j"] = validity.mean
            entry["energy_rel_halfwidth"] = validity.rel_half_width
            entry["energy_valid"] = validity.valid
        entry["status"] = "done"
        return entry


def _read_energy_log(path: Path) -> list[float]:
    if not path.exists():
        return []
    values = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if line:
            values.append(float(line))
    return values


def _prepare(cfg: ExperimentConfig, video: VideoSpec, beta_factors) -> dict:
    """Filter and downscale one input for every required (beta, factor)."""
    clip = video.load()
    spectrum = None
    info = {}
    by_beta = defaultdict(list)
    for beta, factor in beta_factors:
        by_beta[beta].append(factor)
    for beta in sorted(by_beta):
        filtered = clip
        if beta > 0:
            if spectrum is None:
                spectrum = forward_fft(clip, cfg.max_coefficients)
            filtered = filter_video(clip, cfg.csf, beta, cfg.normalize, spectrum=spectrum)
        for factor in sorted(by_beta[beta]):
            scaled = downscale_temporal(filtered, DownscaleSpec(factor, cfg.allow_any_factor))
            key = TupleKey(video.name, beta, factor, 0)
            path = cfg.output_dir / key.prepped_name
            path.parent.mkdir(parents=True, exist_ok=True)
            write_video(scaled, path, "y4m")
            info[(beta, factor)] = {
                "width": scaled.width,
                "height": scaled.height,
                "fps": scaled.frame_rate,
                "frame_count": scaled.frame_count,
            }
    return info


def run_pipeline(cfg: ExperimentConfig) -> RunReport:
    """Run every pending (video, beta, factor, crf) tuple.

    Tuples already marked done in the manifest are skipped without invoking
    any subprocess. A failing tuple is recorded and the batch continues.
    The results CSV is rewritten from the manifest in tuple order.
    """
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest = _Manifest(out / MANIFEST_NAME)
    config_hash = cfg.config_hash()
    manifest.data["config_hash"] = config_hash
    report = RunReport(out / MANIFEST_NAME, out / RESULTS_NAME)
    keys = _tuples(cfg)
    pending = [k for k in keys if not manifest.done(k)]
    report.skipped = len(keys) - len(pending)

    prep: dict = {}
    need = defaultdict(set)
    for k in pending:
        need[k.video].add((k.beta, k.factor))
    for video in cfg.videos:
        if need[video.name]:
            for (beta, factor), meta in _prepare(cfg, video, need[video.name]).items():
                prep[(video.name, beta, factor)] = meta

    runner = _Runner(cfg, manifest, config_hash)

    def job(key: TupleKey):
        try:
            entry = runner.execute(key, prep[(key.video, key.beta, key.factor)])
        except Exception as exc:  # keep the batch alive; the manifest carries the reason
            logger.exception("tuple %s crashed", key.id)
            entry = {"status": "failed", "error": f"{type(exc).__name__}: {exc}", "config_hash": config_hash}
        manifest.record(key, entry)
        if entry["status"] != "done":
            logger.error("tuple %s failed: %s", key.id, entry.get("error"))
        return key, entry

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        for key, entry in pool.map(job, pending):
            if entry["status"] == "done":
                report.executed += 1
            else:
                report.failed.append(key.id)

    manifest._flush()
    write_results_csv(manifest.data, keys, report.results_path)
    report.invocations = runner.invocations
    return report


def _label(video: str, fps: float, beta: float) -> str:
    return f"{video}|{fps:g}fps|b{beta:g}"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(manifest_data: dict, keys, path: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for key in keys:
        entry = manifest_data["tuples"].get(key.id)
        if entry is None:
            continue
        fps = entry.get("fps")
        row = {
            "label": _label(key.video, fps, key.beta) if fps else "",
            "video": key.video,
            "beta": f"{key.beta:g}",
            "factor": key.factor,
            "crf": key.crf,
            "fps": fps,
            "frame_count": entry.get("frame_count"),
            "bitstream_bytes": entry.get("bitstream_bytes"),
            "bitrate_bps": entry.get("bitrate_bps"),
            "energy_j": entry.get("energy_j"),
            "energy_samples": len(entry.get("energy_samples", [])),
            "energy_rel_halfwidth": entry.get("energy_rel_halfwidth"),
            "energy_valid": entry.get("energy_valid"),
            "status": entry.get("status"),
            "config_hash": entry.get("config_hash"),
            "encoder_cmd": entry.get("encoder_cmd"),
        }
        writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])
    tmp = path.with_suffix(".csv.part")
    tmp.write_text(buf.getvalue())
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# collection


def _read_quality_csv(path) -> dict[tuple, float]:
    table = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"video", "beta", "factor", "crf", "quality"} - set(reader.fieldnames or [])
        if missing:
            raise JoinError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            key = (row["video"], float(row["beta"]), int(row["factor"]), int(row["crf"]))
            if key in table:
                raise JoinError(f"{path}: duplicate quality row for {key}")
            table[key] = float(row["quality"])
    return table


def collect_results(manifest, quality_csv, require_valid_energy: bool = True) -> list[RdCurve]:
    """Join manifest entries with externally computed quality scores.

    ``manifest`` is a path to ``manifest.json`` or its loaded dict. Returns one
    curve per (video, beta, factor), sorted by label. Quality rows with no
    matching bitstream are logged and ignored; a bitstream with no quality
    row raises ``JoinError``.
    """
    if not isinstance(manifest, dict):
        manifest = json.loads(Path(manifest).read_text())
    quality = _read_quality_csv(quality_csv)
    groups: dict[tuple, list[RdPoint]] = defaultdict(list)
    labels = {}
    missing = []
    used = set()
    for tid in sorted(manifest["tuples"]):
        entry = manifest["tuples"][tid]
        if entry.get("status") != "done":
            logger.warning("skipping %s: status %s", tid, entry.get("status"))
            continue
        key = (entry["video"], float(entry["beta"]), int(entry["factor"]), int(entry["crf"]))
        if key not in quality:
            missing.append(key)
            continue
        used.add(key)
        energy = entry.get("energy_j")
        if energy is not None and require_valid_energy and not entry.get("energy_valid", False):
            raise InvalidEnergyError(
                f"{tid}: energy CI half-width {entry.get('energy_rel_halfwidth'):.4f} of mean "
                "exceeds the validity threshold; measure more repetitions"
            )
        group = key[:3]
        labels[group] = _label(entry["video"], entry["fps"], entry["beta"])
        groups[group].append(
            RdPoint(
                bitrate=float(entry["bitrate_bps"]),
                quality=quality[key],
                decode_energy=None if energy is None else float(energy),
                crf=float(entry["crf"]),
            )
        )
    if missing:
        listing = ", ".join(f"(video={v}, beta={b:g}, factor={f}, crf={c})" for v, b, f, c in missing)
        raise JoinError(f"no quality score for {len(missing)} bitstream(s): {listing}")
    for extra in sorted(set(quality) - used):
        logger.warning("quality row without a completed bitstream: %s", extra)
    curves = []
    for group in sorted(groups, key=lambda g: labels[g]):
        curve = RdCurve(labels[group], sorted(groups[group], key=lambda p: p.crf))
        curve.validate()
        curves.append(curve)
    return curves
