"""Exit criteria for the primary component, one test per criterion.

Run with ``pytest tests/test_acceptance.py``; the terminal summary lists a
PASS/FAIL/SKIP line for each criterion.
"""

import csv
import json
import math
import shutil
import subprocess
import time

import numpy as np
import pytest

from stprune.bd import BdResult, RdCurve, RdPoint, aggregate_bd, bd_delta
from stprune.csf import DEFAULT_MODEL, sensitivity
from stprune.harness import EnergySamples, check_validity, load_config, run_pipeline
from stprune.pruning import DEFAULT_BETAS, apply_mask, build_mask, filter_video
from stprune.spectrum import forward_fft, hermitian_partner, inverse_fft, spectral_energy
from stprune.temporal import DownscaleSpec, downscale_temporal
from stprune.video_io import VideoVolume, write_video

import akima_oracle
import mock_tools
from conftest import random_volume
from test_harness import write_config
from test_pruning import nyquist_checkerboard, nyquist_threshold_beta

crit = pytest.mark.acceptance


@crit("FFT round trip: bit-exact, Hermitian <= 1e-9 rel, Parseval <= 1e-6 rel, < 10 s")
def test_fft_round_trip(rng):
    start = time.perf_counter()
    for frames, height, width in [(4, 4, 4), (7, 12, 16), (32, 32, 32)]:
        for _ in range(3):
            v = random_volume(rng, frames, height, width)
            sp = forward_fft(v)
            assert np.array_equal(inverse_fft(sp), v.luma)
            c = sp.coefficients
            herm = np.abs(c - np.conj(hermitian_partner(c))).max() / np.abs(c).max()
            assert herm <= 1e-9
            time_energy = float(np.sum(v.luma.astype(np.float64) ** 2))
            assert abs(spectral_energy(sp) / sp.size - time_energy) / time_energy <= 1e-6
    assert time.perf_counter() - start < 10.0


@crit("CSF analytic values: gamma(0) ~ 56.22 (1e-3), gamma(32) ~ 5.64 (1e-2), single peak on [0,100] step 0.01")
def test_csf_values():
    g, f0, f1, alpha, p = 373.08, 4.1726, 1.3625, 0.8493, 0.7786
    by_hand = lambda f: g * (1 / math.cosh((f / f0) ** p) - alpha / math.cosh(f / f1))
    assert sensitivity(DEFAULT_MODEL, 0.0) == pytest.approx(373.08 * (1 - 0.8493), abs=1e-3)
    assert sensitivity(DEFAULT_MODEL, 0.0) == pytest.approx(by_hand(0.0), abs=1e-3)
    assert sensitivity(DEFAULT_MODEL, 32.0) == pytest.approx(5.64, abs=1e-2)
    assert sensitivity(DEFAULT_MODEL, 32.0) == pytest.approx(by_hand(32.0), abs=1e-2)
    f = np.arange(10001) * 0.01
    gam = sensitivity(DEFAULT_MODEL, f)
    peaks = np.where((gam[1:-1] > gam[:-2]) & (gam[1:-1] > gam[2:]))[0] + 1
    assert len(peaks) == 1
    assert np.all(np.diff(gam[peaks[0]:]) < 0)
    assert gam[peaks[0]] > gam[0]


@crit("beta = 0 identity on >= 5 random volumes")
def test_beta_zero_identity(rng):
    for shape in [(4, 4, 4), (5, 6, 7), (8, 8, 8), (3, 9, 10), (16, 12, 7), (2, 17, 5)]:
        v = random_volume(rng, *shape)
        assert np.array_equal(filter_video(v, DEFAULT_MODEL, 0.0).luma, v.luma)


@crit("mask monotone over beta in {0, 0.01, 0.05, 0.2}; energy non-expansion exact")
def test_mask_monotonicity(rng):
    # low-contrast noise on a flat field so the larger betas actually prune
    luma = np.clip(128 + rng.normal(0, 1.5, (16, 16, 16)), 0, 255).round().astype(np.uint8)
    v = VideoVolume.from_luma(luma, 120.0)
    sp = forward_fft(v)
    e_in = spectral_energy(sp)
    kept = []
    prev_bits = None
    for beta in DEFAULT_BETAS:
        m = build_mask(sp, DEFAULT_MODEL, beta)
        kept.append(m.kept_count)
        if prev_bits is not None:
            assert not np.any(m.bits & ~prev_bits)
        prev_bits = m.bits
        assert spectral_energy(apply_mask(sp, m)) <= e_in
    assert kept == sorted(kept, reverse=True)
    assert kept[-1] < kept[0]


@crit("sinusoid removal: DC 128 + Nyquist +-1 pattern -> constant 128 +- 1")
def test_sinusoid_removal():
    v = nyquist_checkerboard()
    beta = 1.05 * nyquist_threshold_beta()
    out = filter_video(v, DEFAULT_MODEL, beta)
    assert np.abs(out.luma.astype(int) - 128).max() <= 1
    # just below the threshold the pattern survives untouched
    assert filter_video(v, DEFAULT_MODEL, 0.95 * nyquist_threshold_beta()) == v


@crit("frame averaging: [10,20,30,40] -> [15,35] / [25]; 120 -> 60 -> 30 fps")
def test_frame_averaging():
    luma = np.stack([np.full((4, 4), x, np.uint8) for x in (10, 20, 30, 40)])
    v = VideoVolume.from_luma(luma, 120.0)
    half = downscale_temporal(v, DownscaleSpec(2))
    quarter = downscale_temporal(v, DownscaleSpec(4))
    assert half.luma[:, 0, 0].tolist() == [15, 35] and np.all(half.luma == half.luma[:, :1, :1])
    assert quarter.luma[:, 0, 0].tolist() == [25] and np.all(quarter.luma == 25)
    assert half.frame_rate == 60.0 and quarter.frame_rate == 30.0
    assert downscale_temporal(half, 2).frame_rate == 30.0


def _curve(label, rates, quality):
    return RdCurve(label, [RdPoint(r, q, None, c) for r, q, c in zip(rates, quality, (18, 23, 28, 33, 38))])


@crit("BD oracle: identical 0 %, 2x rate +100 +- 0.01 pp, random curves vs oracle 0.01 pp, min/mean/max aggregation")
def test_bd_oracle(rng):
    rates = [2e5, 4.5e5, 9e5, 2e6, 4.2e6]
    greed = [42.0, 38.5, 35.0, 33.2, 31.9]
    ref = _curve("ref", rates, greed)
    assert round(bd_delta(ref, ref).bd_value, 3) == 0.0
    assert bd_delta(_curve("x2", [2 * r for r in rates], greed), ref).bd_value == pytest.approx(100.0, abs=0.01)
    checked = 0
    while checked < 25:
        rr = np.sort(np.exp(rng.uniform(np.log(1e5), np.log(8e6), 5)))
        tr = np.sort(rr * np.exp(rng.uniform(-0.7, 0.7, 5)))
        rq = np.sort(rng.uniform(10, 50, 5))[::-1]
        tq = np.sort(rq + rng.uniform(-3, 3, 5))[::-1]
        lo, hi = max(rq.min(), tq.min()), min(rq.max(), tq.max())
        if hi - lo < 1.0:
            continue
        got = bd_delta(_curve("t", tr, tq), _curve("r", rr, rq)).bd_value
        want = akima_oracle.bd_percent(tq, tr, rq, rr)
        assert got == pytest.approx(want, abs=0.01)
        checked += 1
    # per-sequence list whose min/mean/max are -92.88 / -21.41 / 125.09
    synthetic = [-92.88, -46.42, -46.42, -46.42, 125.09]
    s = aggregate_bd([BdResult(x, (30.0, 40.0), "rate") for x in synthetic])
    assert (round(s.min, 2), round(s.mean, 2), round(s.max, 2)) == (-92.88, -21.41, 125.09)


@crit("validity check: zero variance valid; hand-computed t interval within 1e-9")
def test_validity():
    z = check_validity(EnergySamples("z", [7.5] * 6))
    assert z.valid and z.half_width == 0.0
    samples = [10.0, 10.1, 9.9, 10.05, 9.95]
    h = 2.7764451052 * math.sqrt(0.025 / 4) / math.sqrt(5)
    v = check_validity(EnergySamples("s", samples), 0.02, 0.95)
    assert abs(v.half_width - h) <= 1e-9
    assert v.valid == (h / 10.0 <= 0.02)


@crit("harness: mock tools give byte-identical results CSV; failure injection -> exit 2, complete manifest")
def test_harness_determinism(tmp_path):
    enc, dec = mock_tools.install(tmp_path)
    a = run_pipeline(load_config(write_config(tmp_path, enc, dec, out="a")))
    b = run_pipeline(load_config(write_config(tmp_path, enc, dec, out="b")))
    assert a.exit_code == b.exit_code == 0
    assert a.results_path.read_bytes() == b.results_path.read_bytes()

    enc_fail, _ = mock_tools.install(tmp_path, fail_crfs=(28,))
    c = run_pipeline(load_config(write_config(tmp_path, enc_fail, dec, out="c")))
    assert c.exit_code == 2
    manifest = json.loads(c.manifest_path.read_text())
    assert len(manifest["tuples"]) == 60
    statuses = {k: e["status"] for k, e in manifest["tuples"].items()}
    assert sum(s == "failed" for s in statuses.values()) == 12
    rows = list(csv.DictReader(c.results_path.open()))
    assert len(rows) == 60


def _hevc_tools():
    ffmpeg = shutil.which("ffmpeg")
    if ffmpeg:
        probe = subprocess.run([ffmpeg, "-hide_banner", "-encoders"], capture_output=True, text=True)
        if "libx265" in probe.stdout:
            return ffmpeg
    return None


@crit("optional: real HEVC encode/decode, 120 -> 60 fps gives smaller stream and faster decode")
@pytest.mark.integration
def test_hevc_direction(tmp_path, rng):
    ffmpeg = _hevc_tools()
    if ffmpeg is None:
        pytest.skip("no ffmpeg with libx265 on PATH")
    t, y, x = np.indices((32, 64, 64))
    luma = (128 + 60 * np.sin(0.3 * x + 0.2 * y + 0.5 * t) + rng.normal(0, 8, (32, 64, 64))).clip(0, 255)
    v = VideoVolume.from_luma(luma.round().astype(np.uint8), 120.0)
    results = {}
    for name, clip in (("full", v), ("half", downscale_temporal(v, 2))):
        src = tmp_path / f"{name}.y4m"
        write_video(clip, src)
        bs = tmp_path / f"{name}.hevc"
        subprocess.run(
            [ffmpeg, "-v", "error", "-y", "-i", str(src), "-c:v", "libx265", "-preset", "medium", "-crf", "28", str(bs)],
            check=True,
        )
        start = time.perf_counter()
        for _ in range(5):
            subprocess.run([ffmpeg, "-v", "error", "-i", str(bs), "-f", "null", "-"], check=True)
        results[name] = (bs.stat().st_size, time.perf_counter() - start)
    assert results["half"][0] < results["full"][0]
    assert results["half"][1] < results["full"][1]
