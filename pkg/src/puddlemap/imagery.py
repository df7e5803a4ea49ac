"""Frame ingestion (binary PPM), ROI cropping, and Gaussian pre-smoothing."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve1d

MAX_DIMENSION = 1 << 16


class PpmError(ValueError):
    """Malformed or unsupported PPM/PGM data."""


class RoiError(ValueError):
    """ROI not contained in its frame."""


@dataclass(frozen=True)
class Roi:
    """Rectangular region of interest, top-left corner (x0, y0), size w x h."""

    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise RoiError(f"roi extent must be >= 1, got {self.w}x{self.h}")
        if self.x0 < 0 or self.y0 < 0:
            raise RoiError(f"roi origin must be non-negative, got ({self.x0}, {self.y0})")


@dataclass(frozen=True)
class Frame:
    """One RGB video frame; pixels are (height, width, 3) uint8."""

    pixels: np.ndarray
    timestamp: float | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"pixels must be (h, w, 3), got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("frame must be at least 1x1")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def _read_header_tokens(data: bytes, count: int, start: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens, skipping # comments."""
    tokens = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        if j == i:
            raise PpmError("truncated header")
        tok = data[i:j]
        if not re.fullmatch(rb"\d+", tok):
            raise PpmError(f"non-numeric header token {tok!r}")
        tokens.append(int(tok))
        i = j
    # exactly one whitespace byte separates the header from the payload
    if i >= n or not data[i : i + 1].isspace():
        raise PpmError("missing whitespace after header")
    return tokens, i + 1


def load_frame(path: str | Path, timestamp: float | None = None) -> Frame:
    """Load a binary PPM (P6, maxval 255) file as a Frame, byte-exact."""
    data = Path(path).read_bytes()
    if data[:2] != b"P6":
        raise PpmError(f"bad magic {data[:2]!r}, expected P6")
    (width, height, maxval), payload_start = _read_header_tokens(data, 3, 2)
    if maxval != 255:
        raise PpmError(f"unsupported maxval {maxval}, only 255")
    if width > MAX_DIMENSION or height > MAX_DIMENSION:
        raise PpmError(f"oversized dimensions {width}x{height}")
    if width < 1 or height < 1:
        raise PpmError(f"bad dimensions {width}x{height}")
    expected = width * height * 3
    payload = data[payload_start : payload_start + expected]
    if len(payload) < expected:
        raise PpmError(f"truncated payload: {len(payload)} of {expected} bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return Frame(pixels=pixels.copy(), timestamp=timestamp)


def save_frame(frame: Frame, path: str | Path) -> None:
    """Write a Frame as binary PPM (P6, maxval 255)."""
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + frame.pixels.tobytes())


def crop(frame: Frame, roi: Roi) -> Frame:
    """Crop a frame to the ROI; output pixel (r, c) = input (y0+r, x0+c)."""
    if roi.x0 + roi.w > frame.width or roi.y0 + roi.h > frame.height:
        raise RoiError(
            f"roi ({roi.x0},{roi.y0},{roi.w},{roi.h}) exceeds frame "
            f"{frame.width}x{frame.height}"
        )
    out = frame.pixels[roi.y0 : roi.y0 + roi.h, roi.x0 : roi.x0 + roi.w]
    return Frame(pixels=out.copy(), timestamp=frame.timestamp)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian kernel of radius ceil(4*sigma)."""
    radius = math.ceil(4.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def gaussian_blur(frame: Frame | np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing per band; clamps at borders.

    Returns a float64 (h, w, 3) raster. sigma = 0 returns the input values
    unchanged as reals.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    out = px.astype(np.float64)
    if sigma == 0:
        return out
    k = gaussian_kernel(sigma)
    out = convolve1d(out, k, axis=0, mode="nearest")
    out = convolve1d(out, k, axis=1, mode="nearest")
    return out


@dataclass(frozen=True)
class FrameSequence:
    """Ordered frames with strictly increasing timestamps."""

    entries: tuple[tuple[float, Path], ...]

    def __post_init__(self):
        ts = [t for t, _ in self.entries]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def load(self, index: int) -> Frame:
        ts, path = self.entries[index]
        return load_frame(path, timestamp=ts)


def load_sequence(frames_dir: str | Path) -> FrameSequence:
    """Scan a directory of <epoch-seconds>.ppm files, sorted by timestamp."""
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise FileNotFoundError(f"frames directory not found: {frames_dir}")
    entries = []
    for p in frames_dir.iterdir():
        if p.suffix != ".ppm":
            continue
        try:
            ts = float(p.stem)
        except ValueError:
            raise PpmError(f"frame filename {p.name} is not <epoch-seconds>.ppm")
        entries.append((ts, p))
    entries.sort(key=lambda e: e[0])
    return FrameSequence(entries=tuple(entries))
