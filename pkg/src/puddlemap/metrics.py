"""Surface-water indices and time-series analytics.

Pixel and area-projected SOFI, centered moving average, ultrasonic
distance-to-depth conversion, rising/falling phase splitting, Pearson
correlation, and cross-correlation lag estimation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tree import WaterMask


class SeriesError(ValueError):
    """Unusable time-series input (empty, constant, or insufficient overlap)."""


@dataclass(frozen=True)
class TimeSeries:
    """Strictly increasing timestamps with finite values; unit is a tag."""

    times: np.ndarray  # seconds
    values: np.ndarray
    unit: str = "ratio"  # "ratio" | "m"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.shape != v.shape or t.ndim != 1:
            raise SeriesError("times and values must be equal-length 1-D arrays")
        if t.size and np.any(np.diff(t) <= 0):
            raise SeriesError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise SeriesError("values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size

    def slice(self, t0: float, t1: float) -> "TimeSeries":
        m = (self.times >= t0) & (self.times <= t1)
        return TimeSeries(times=self.times[m], values=self.values[m], unit=self.unit)

    def median_interval(self) -> float:
        if len(self) < 2:
            raise SeriesError("need >= 2 samples for a sampling interval")
        return float(np.median(np.diff(self.times)))


@dataclass(frozen=True)
class SofiSample:
    timestamp: float
    pixel_sofi: float
    projected_sofi: float
    usable_pixels: int
    usable_area_m2: float


@dataclass(frozen=True)
class DepthSample:
    depth: float  # m
    uncertainty: float  # m, 0.5% of the raw distance measurement


@dataclass(frozen=True)
class PhaseReport:
    peak_ts: float
    rising: tuple[float, float]  # timestamp range [start, peak]
    falling: tuple[float, float]  # [peak, end]
    rising_r: float | None
    falling_r: float | None
    lag_s: float | None
    n_rising: int
    n_falling: int
    degenerate: bool = False


def pixel_sofi(mask: WaterMask) -> float:
    """Wet-pixel count over total pixel count."""
    if mask.wet.size == 0:
        raise ValueError("empty mask")
    return float(mask.wet.sum() / mask.wet.size)


def projected_sofi(mask: WaterMask, areas: np.ndarray) -> float:
    """Ground-area-weighted wet ratio; NaN-area pixels excluded from both sums."""
    if areas.shape != mask.wet.shape:
        raise ValueError(f"areas {areas.shape} do not match mask {mask.wet.shape}")
    usable = np.isfinite(areas)
    total = float(areas[usable].sum())
    if total <= 0.0:
        raise ValueError("zero usable footprint area")
    wet = float(areas[usable & mask.wet].sum())
    return wet / total


def sofi_sample(mask: WaterMask, areas: np.ndarray) -> SofiSample:
    usable = np.isfinite(areas)
    return SofiSample(
        timestamp=mask.timestamp if mask.timestamp is not None else 0.0,
        pixel_sofi=pixel_sofi(mask),
        projected_sofi=projected_sofi(mask, areas),
        usable_pixels=int(usable.sum()),
        usable_area_m2=float(areas[usable].sum()),
    )


def moving_average(s: TimeSeries, window: float) -> TimeSeries:
    """Centered time-window mean; output timestamps equal input timestamps."""
    if window <= 0:
        raise ValueError(f"window must be > 0, got {window}")
    if len(s) == 0:
        raise SeriesError("empty series")
    half = window / 2.0
    lo = np.searchsorted(s.times, s.times - half, side="left")
    hi = np.searchsorted(s.times, s.times + half, side="right")
    csum = np.concatenate([[0.0], np.cumsum(s.values)])
    out = (csum[hi] - csum[lo]) / (hi - lo)
    return TimeSeries(times=s.times.copy(), values=out, unit=s.unit)


def distance_to_depth(distance: float, mount_height: float) -> DepthSample:
    """Depth below the transmitter mount from an ultrasonic range reading."""
    if distance <= 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    if distance > mount_height:
        raise ValueError(
            f"distance {distance} exceeds mount height {mount_height} (sensor fault)"
        )
    return DepthSample(depth=mount_height - distance, uncertainty=0.005 * distance)


def split_phases(
    well: TimeSeries, smooth_window: float = 300.0
) -> tuple[tuple[float, float], tuple[float, float], float, bool]:
    """Split at the peak of the smoothed series.

    Returns (rising_range, falling_range, peak_ts, degenerate). The peak is
    the earliest maximum; degenerate marks single-sample phases.
    """
    if len(well) < 3:
        raise SeriesError(f"need >= 3 samples to split phases, got {len(well)}")
    smoothed = moving_average(well, smooth_window)
    peak_idx = int(np.argmax(smoothed.values))  # argmax takes the earliest tie
    peak_ts = float(well.times[peak_idx])
    rising = (float(well.times[0]), peak_ts)
    falling = (peak_ts, float(well.times[-1]))
    degenerate = peak_idx == 0 or peak_idx == len(well) - 1
    return rising, falling, peak_ts, degenerate


def _pair_on_common_grid(
    x: TimeSeries, y: TimeSeries, t0: float, t1: float
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-neighbor pairing on the coarser series' timestamps."""
    xs = x.slice(t0, t1)
    ys = y.slice(t0, t1)
    if len(xs) < 2 or len(ys) < 2:
        raise SeriesError("insufficient overlap in the requested range")
    coarse, fine = (xs, ys) if xs.median_interval() >= ys.median_interval() else (ys, xs)
    tol = fine.median_interval() / 2.0
    idx = np.searchsorted(fine.times, coarse.times)
    pa, pb = [], []
    for i, t in enumerate(coarse.times):
        cand = [j for j in (idx[i] - 1, idx[i]) if 0 <= j < len(fine)]
        j = min(cand, key=lambda j: abs(fine.times[j] - t))
        if abs(fine.times[j] - t) <= tol:
            pa.append(coarse.values[i])
            pb.append(fine.values[j])
    a, b = np.array(pa), np.array(pb)
    if coarse is ys:
        a, b = b, a
    return a, b


def pearson(x: TimeSeries, y: TimeSeries, t_range: tuple[float, float]) -> float:
    """Pearson product-moment r over nearest-neighbor-paired samples."""
    a, b = _pair_on_common_grid(x, y, t_range[0], t_range[1])
    if a.size < 3:
        raise SeriesError(f"need >= 3 paired samples, got {a.size}")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        raise SeriesError("r undefined for a constant series")
    a = a - a.mean()
    b = b - b.mean()
    return float((a @ b) / np.sqrt((a @ a) * (b @ b)))


def lag_xcorr(a: TimeSeries, b: TimeSeries, max_lag: float) -> float:
    """Lag (seconds) of b behind a by normalized cross-correlation.

    Both series are linearly resampled onto the coarser common uniform grid.
    Positive lag means b lags a; ties prefer the smallest |lag|.
    """
    t0 = max(a.times[0], b.times[0])
    t1 = min(a.times[-1], b.times[-1])
    if t1 <= t0:
        raise SeriesError("series do not overlap")
    dt = max(a.median_interval(), b.median_interval())
    if max_lag >= (t1 - t0) / 2.0:
        raise SeriesError(f"max_lag {max_lag} must be < half the overlap {(t1 - t0) / 2}")
    grid = np.arange(t0, t1 + dt / 2.0, dt)
    av = np.interp(grid, a.times, a.values)
    bv = np.interp(grid, b.times, b.values)
    av = av - av.mean()
    bv = bv - bv.mean()
    n = grid.size
    max_shift = int(max_lag / dt)

    best_r = -np.inf
    best_s = 0
    for s in sorted(range(-max_shift, max_shift + 1), key=lambda s: (abs(s), s)):
        # positive s: b shifted earlier matches a, i.e. b lags a by s*dt
        if s >= 0:
            aa, bb = av[: n - s], bv[s:]
        else:
            aa, bb = av[-s:], bv[: n + s]
        if aa.size < 3:
            continue
        denom = np.sqrt((aa @ aa) * (bb @ bb))
        if denom == 0.0:
            continue
        r = float((aa @ bb) / denom)
        # shifts are scanned in ascending |s|; the margin keeps rounding
        # noise from breaking exact ties, which go to the smallest |lag|
        if r > best_r + 1e-12:
            best_r = r
            best_s = s
    if not np.isfinite(best_r):
        raise SeriesError("insufficient overlap for cross-correlation")
    return best_s * dt


def phase_report(
    extent: TimeSeries,
    well: TimeSeries,
    max_lag: float,
    smooth_window: float = 300.0,
) -> PhaseReport:
    """Correlation/lag analytics between surface extent and well level."""
    rising, falling, peak_ts, degenerate = split_phases(well, smooth_window)

    def safe_r(rng):
        try:
            return pearson(extent, well, rng)
        except SeriesError:
            return None

    try:
        lag = lag_xcorr(extent, well, max_lag)
    except SeriesError:
        lag = None
    n_rising = int(np.count_nonzero((well.times >= rising[0]) & (well.times <= rising[1])))
    n_falling = int(
        np.count_nonzero((well.times >= falling[0]) & (well.times <= falling[1]))
    )
    return PhaseReport(
        peak_ts=peak_ts,
        rising=rising,
        falling=falling,
        rising_r=safe_r(rising),
        falling_r=safe_r(falling),
        lag_s=lag,
        n_rising=n_rising,
        n_falling=n_falling,
        degenerate=degenerate,
    )


def save_sofi_csv(samples: list[SofiSample], path: str | Path) -> None:
    lines = ["timestamp,pixel_sofi,projected_sofi,usable_pixels,usable_area_m2"]
    for s in samples:
        lines.append(
            f"{s.timestamp:.17g},{s.pixel_sofi:.17g},{s.projected_sofi:.17g},"
            f"{s.usable_pixels},{s.usable_area_m2:.17g}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_sofi_csv(path: str | Path) -> list[SofiSample]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    expect = ["timestamp", "pixel_sofi", "projected_sofi", "usable_pixels", "usable_area_m2"]
    if header is None or [h.strip() for h in header] != expect:
        raise ValueError(f"bad sofi.csv header: {header}")
    out = []
    for rec in reader:
        if not rec:
            continue
        out.append(
            SofiSample(
                timestamp=float(rec[0]),
                pixel_sofi=float(rec[1]),
                projected_sofi=float(rec[2]),
                usable_pixels=int(rec[3]),
                usable_area_m2=float(rec[4]),
            )
        )
    return out


def load_well_csv(path: str | Path, mount_height: float | None = None) -> TimeSeries:
    """well.csv: timestamp,distance_m (needs mount_height) or timestamp,depth_m."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise ValueError("empty well.csv")
    cols = [h.strip().lower() for h in header]
    if cols == ["timestamp", "distance_m"]:
        mode = "distance"
        if mount_height is None:
            raise ValueError("distance_m input requires the well mount height")
    elif cols == ["timestamp", "depth_m"]:
        mode = "depth"
    else:
        raise ValueError(f"bad well.csv header: {header}")
    times, values = [], []
    for rec in reader:
        if not rec:
            continue
        t, raw = float(rec[0]), float(rec[1])
        times.append(t)
        values.append(
            distance_to_depth(raw, mount_height).depth if mode == "distance" else raw
        )
    return TimeSeries(times=np.array(times), values=np.array(values), unit="m")


def save_phase_report(report: PhaseReport, path: str | Path) -> None:
    """phase_report.txt: key = value lines; undefined statistics print as nan."""

    def fmt(v):
        return "nan" if v is None else f"{v:.17g}"

    lines = [
        f"peak_ts = {report.peak_ts:.17g}",
        f"rising_r = {fmt(report.rising_r)}",
        f"falling_r = {fmt(report.falling_r)}",
        f"lag_s = {fmt(report.lag_s)}",
        f"n_rising = {report.n_rising}",
        f"n_falling = {report.n_falling}",
        f"degenerate = {str(report.degenerate).lower()}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
