"""Bjontegaard-Delta rate and decoding-energy differences.

log10(cost) is interpolated as a function of quality with Akima splines and
the mean difference between two curves is taken over their overlapping
quality range. Quality scores where lower is better (e.g. GREED) are negated
internally so both orientations share one code path.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BdError",
    "NoOverlapError",
    "RdPoint",
    "RdCurve",
    "BdResult",
    "BdSummary",
    "AkimaInterpolant",
    "akima_interpolant",
    "simpson",
    "bd_delta",
    "aggregate_bd",
    "read_curves_csv",
    "write_curves_csv",
    "write_bd_csv",
]

LOWER_BETTER = "lower-better"
HIGHER_BETTER = "higher-better"
METRICS = ("rate", "energy")
SIMPSON_INTERVALS = 1000


class BdError(ValueError):
    pass


class NoOverlapError(BdError):
    pass


@dataclass(frozen=True)
class RdPoint:
    bitrate: float
    quality: float
    decode_energy: float | None = None
    crf: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.bitrate) and self.bitrate > 0):
            raise BdError(f"bitrate must be > 0, got {self.bitrate}")
        if not math.isfinite(self.quality):
            raise BdError(f"quality must be finite, got {self.quality}")
        if self.decode_energy is not None and not (
            math.isfinite(self.decode_energy) and self.decode_energy > 0
        ):
            raise BdError(f"decode energy must be > 0, got {self.decode_energy}")

    def cost(self, metric: str) -> float:
        if metric == "rate":
            return self.bitrate
        if metric == "energy":
            if self.decode_energy is None:
                raise BdError("point has no decoding energy")
            return self.decode_energy
        raise BdError(f"unknown metric {metric!r}")


@dataclass
class RdCurve:
    """Rate/energy-quality points of one configuration, one point per crf.

    Quality must be strictly monotone across crf (when crf is known) and free
    of ties; the cost may wobble.
    """

    label: str
    points: list[RdPoint] = field(default_factory=list)

    def validate(self) -> None:
        if len(self.points) < 4:
            raise BdError(f"curve {self.label!r} has {len(self.points)} points, need >= 4")
        qualities = [p.quality for p in self.points]
        if len(set(qualities)) != len(qualities):
            raise BdError(f"curve {self.label!r} has duplicate quality values")
        if all(p.crf is not None for p in self.points):
            by_crf = [p.quality for p in sorted(self.points, key=lambda p: p.crf)]
            diffs = np.diff(by_crf)
            if not (np.all(diffs > 0) or np.all(diffs < 0)):
                raise BdError(
                    f"curve {self.label!r}: quality is not monotone across crf {by_crf}; "
                    "check the measurement data"
                )

    def arrays(self, metric: str, orientation: str = LOWER_BETTER):
        """Canonical (quality, log10 cost) arrays sorted by canonical quality."""
        sign = _orientation_sign(orientation)
        q = np.array([sign * p.quality for p in self.points])
        c = np.log10([p.cost(metric) for p in self.points])
        order = np.argsort(q)
        return q[order], c[order]


@dataclass(frozen=True)
class BdResult:
    bd_value: float
    quality_overlap: tuple[float, float]
    metric: str
    test_label: str = ""
    ref_label: str = ""


@dataclass(frozen=True)
class BdSummary:
    min: float
    mean: float
    max: float
    count: int


def _orientation_sign(orientation: str) -> float:
    if orientation == LOWER_BETTER:
        return -1.0
    if orientation == HIGHER_BETTER:
        return 1.0
    raise BdError(f"orientation must be {LOWER_BETTER!r} or {HIGHER_BETTER!r}, got {orientation!r}")


class AkimaInterpolant:
    """Akima piecewise cubic through ``(xs, ys)``.

    Node slopes use Akima's weighted average of neighbouring secants, with
    two secants extrapolated linearly beyond each end. Outside ``[x0, xn]``
    the end cubics are extended.
    """

    def __init__(self, xs, ys):
        x = np.asarray(xs, dtype=np.float64)
        y = np.asarray(ys, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape:
            raise BdError("xs and ys must be 1-D and of equal length")
        if x.size < 4:
            raise BdError(f"Akima interpolation needs >= 4 points, got {x.size}")
        dx = np.diff(x)
        if np.any(dx == 0):
            raise BdError("duplicate x values")
        if np.any(dx < 0):
            raise BdError("x values must be strictly increasing")
        m = np.diff(y) / dx
        # two extrapolated secants on each side
        m = np.concatenate(
            [[3 * m[0] - 2 * m[1], 2 * m[0] - m[1]], m, [2 * m[-1] - m[-2], 3 * m[-1] - 2 * m[-2]]]
        )
        # node i sits between m[i+1] and m[i+2] in the extended array
        w_left = np.abs(m[3:] - m[2:-1])
        w_right = np.abs(m[1:-2] - m[:-3])
        denom = w_left + w_right
        # rounding noise on collinear runs must not bypass the average fallback
        usable = denom > 1e-9 * np.abs(m).max()
        t = np.where(
            usable,
            (w_left * m[1:-2] + w_right * m[2:-1]) / np.where(usable, denom, 1.0),
            0.5 * (m[1:-2] + m[2:-1]),
        )
        secant = m[2:-2]
        self.x = x
        self.y = y
        self.slopes = t
        self._c0 = y[:-1]
        self._c1 = t[:-1]
        self._c2 = (3 * secant - 2 * t[:-1] - t[1:]) / dx
        self._c3 = (t[:-1] + t[1:] - 2 * secant) / dx**2

    def __call__(self, xq):
        xq = np.asarray(xq, dtype=np.float64)
        idx = np.clip(np.searchsorted(self.x, xq, side="right") - 1, 0, self.x.size - 2)
        h = xq - self.x[idx]
        out = self._c0[idx] + h * (self._c1[idx] + h * (self._c2[idx] + h * self._c3[idx]))
        return float(out) if out.ndim == 0 else out

    def derivative(self, xq):
        xq = np.asarray(xq, dtype=np.float64)
        idx = np.clip(np.searchsorted(self.x, xq, side="right") - 1, 0, self.x.size - 2)
        h = xq - self.x[idx]
        out = self._c1[idx] + h * (2 * self._c2[idx] + 3 * h * self._c3[idx])
        return float(out) if out.ndim == 0 else out


def akima_interpolant(xs, ys) -> AkimaInterpolant:
    return AkimaInterpolant(xs, ys)


def simpson(f, a: float, b: float, n: int = SIMPSON_INTERVALS) -> float:
    """Composite Simpson rule with ``n`` (even) subintervals."""
    if n < 2 or n % 2:
        raise ValueError("n must be a positive even number")
    x = np.linspace(a, b, n + 1)
    y = np.asarray(f(x), dtype=np.float64)
    h = (b - a) / n
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def bd_delta(
    test: RdCurve,
    ref: RdCurve,
    metric: str = "rate",
    orientation: str = LOWER_BETTER,
    intervals: int = SIMPSON_INTERVALS,
) -> BdResult:
    """Average relative cost of ``test`` over ``ref`` at equal quality, in percent.

    Negative values are savings. Raises ``NoOverlapError`` when the quality
    ranges of the two curves do not intersect.
    """
    if metric not in METRICS:
        raise BdError(f"metric must be one of {METRICS}, got {metric!r}")
    if intervals < 1000:
        raise BdError("use at least 1000 Simpson subintervals")
    test.validate()
    ref.validate()
    q_test, c_test = test.arrays(metric, orientation)
    q_ref, c_ref = ref.arrays(metric, orientation)
    lo = max(q_test[0], q_ref[0])
    hi = min(q_test[-1], q_ref[-1])
    if not lo < hi:
        raise NoOverlapError(f"quality ranges of {test.label!r} and {ref.label!r} do not overlap")
    f_test = AkimaInterpolant(q_test, c_test)
    f_ref = AkimaInterpolant(q_ref, c_ref)
    avg = simpson(lambda q: f_test(q) - f_ref(q), lo, hi, intervals) / (hi - lo)
    bd = (10.0**avg - 1.0) * 100.0
    sign = _orientation_sign(orientation)
    overlap = tuple(sorted((sign * lo, sign * hi)))
    return BdResult(float(bd), overlap, metric, test.label, ref.label)


def aggregate_bd(results) -> BdSummary:
    values = [r.bd_value if isinstance(r, BdResult) else float(r) for r in results]
    if not values:
        raise BdError("cannot aggregate an empty result list")
    return BdSummary(min(values), float(np.mean(values)), max(values), len(values))


CURVE_COLUMNS = ["label", "crf", "bitrate_bps", "energy_j", "quality"]
BD_COLUMNS = ["test_label", "ref_label", "metric", "bd_percent", "q_low", "q_high"]


def _opt_float(text: str):
    text = (text or "").strip()
    return float(text) if text else None


def read_curves_csv(path) -> dict[str, RdCurve]:
    """Read ``label,crf,bitrate_bps,energy_j,quality`` rows into curves by label."""
    curves: dict[str, list[RdPoint]] = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"label", "bitrate_bps", "quality"} - set(reader.fieldnames or [])
        if missing:
            raise BdError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                point = RdPoint(
                    bitrate=float(row["bitrate_bps"]),
                    quality=float(row["quality"]),
                    decode_energy=_opt_float(row.get("energy_j")),
                    crf=_opt_float(row.get("crf")),
                )
            except (TypeError, ValueError) as exc:
                raise BdError(f"{path}:{lineno}: {exc}") from exc
            curves[row["label"]].append(point)
    return {label: RdCurve(label, pts) for label, pts in curves.items()}


def write_curves_csv(curves, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        for curve in curves:
            for p in curve.points:
                writer.writerow(
                    [
                        curve.label,
                        "" if p.crf is None else f"{p.crf:g}",
                        repr(p.bitrate),
                        "" if p.decode_energy is None else repr(p.decode_energy),
                        repr(p.quality),
                    ]
                )


def write_bd_csv(results, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(BD_COLUMNS)
    for r in results:
        writer.writerow(
            [r.test_label, r.ref_label, r.metric, f"{r.bd_value:.4f}", repr(r.quality_overlap[0]), repr(r.quality_overlap[1])]
        )
