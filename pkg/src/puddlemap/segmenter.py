"""Graph-based over-segmentation and per-segment feature extraction.

Kruskal-style merging over an 8-connected grid graph with the adaptive
threshold min(Int(C_i) + k/|C_i|, Int(C_j) + k/|C_j|), followed by a
small-component absorption pass and raster-order relabeling. Edge order is
total (weight, then endpoint indices), so results are fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit


@dataclass(frozen=True)
class SegmentMap:
    """Per-pixel segment labels (contiguous 0..F-1) for one frame."""

    labels: np.ndarray  # (h, w) int32
    segment_count: int
    segment_sizes: np.ndarray  # (F,) int64

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class SegmentFeatures:
    """Per-segment 8-vector: mean RGB, std RGB, centroid row / height, size fraction."""

    vectors: np.ndarray  # (F, 8) float64

    def __len__(self) -> int:
        return self.vectors.shape[0]


FEATURE_NAMES = (
    "mean_r",
    "mean_g",
    "mean_b",
    "std_r",
    "std_g",
    "std_b",
    "centroid_row_frac",
    "size_frac",
)


def _grid_edges(raster: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """8-connected edges (a, b, weight) with a < b, weight = RGB Euclidean distance."""
    h, w = raster.shape[:2]
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)

    pairs = []
    if w > 1:  # right
        pairs.append((idx[:, :-1], idx[:, 1:]))
    if h > 1:  # down
        pairs.append((idx[:-1, :], idx[1:, :]))
    if h > 1 and w > 1:  # down-right, down-left
        pairs.append((idx[:-1, :-1], idx[1:, 1:]))
        pairs.append((idx[:-1, 1:], idx[1:, :-1]))

    flat = raster.reshape(h * w, -1)
    a_parts, b_parts, w_parts = [], [], []
    for pa, pb in pairs:
        a = pa.ravel()
        b = pb.ravel()
        d = flat[a] - flat[b]
        a_parts.append(a)
        b_parts.append(b)
        w_parts.append(np.sqrt(np.einsum("ij,ij->i", d, d)))
    if not a_parts:
        return (
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.float64),
        )
    return np.concatenate(a_parts), np.concatenate(b_parts), np.concatenate(w_parts)


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


@njit(cache=True)
def _merge_pass(n_pixels, ea, eb, ew, k):
    parent = np.arange(n_pixels)
    rank = np.zeros(n_pixels, dtype=np.int64)
    size = np.ones(n_pixels, dtype=np.int64)
    internal = np.zeros(n_pixels)  # max merge weight inside each component
    for i in range(ea.shape[0]):
        ra = _find(parent, ea[i])
        rb = _find(parent, eb[i])
        if ra == rb:
            continue
        w = ew[i]
        ta = internal[ra] + k / size[ra]
        tb = internal[rb] + k / size[rb]
        if w <= min(ta, tb):
            if rank[ra] < rank[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            if rank[ra] == rank[rb]:
                rank[ra] += 1
            size[ra] += size[rb]
            internal[ra] = w  # edges are sorted ascending
    return parent, rank, size


@njit(cache=True)
def _absorb_small(parent, rank, size, ea, eb, min_size):
    for i in range(ea.shape[0]):
        ra = _find(parent, ea[i])
        rb = _find(parent, eb[i])
        if ra == rb:
            continue
        if size[ra] < min_size or size[rb] < min_size:
            if rank[ra] < rank[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            if rank[ra] == rank[rb]:
                rank[ra] += 1
            size[ra] += size[rb]


@njit(cache=True)
def _relabel(parent, n_pixels):
    labels = np.empty(n_pixels, dtype=np.int32)
    remap = np.full(n_pixels, -1, dtype=np.int32)
    next_label = 0
    for p in range(n_pixels):
        root = _find(parent, p)
        if remap[root] < 0:
            remap[root] = next_label
            next_label += 1
        labels[p] = remap[root]
    return labels, next_label


def felzenszwalb(smoothed: np.ndarray, k: float, min_size: int) -> SegmentMap:
    """Segment a smoothed (h, w, 3) raster into F regions."""
    raster = np.asarray(smoothed, dtype=np.float64)
    if raster.ndim != 3 or raster.shape[2] != 3 or raster.size == 0:
        raise ValueError(f"expected nonempty (h, w, 3) raster, got shape {raster.shape}")
    if k <= 0:
        raise ValueError(f"k must be > 0, got {k}")
    if min_size < 1:
        raise ValueError(f"min_size must be >= 1, got {min_size}")

    h, w = raster.shape[:2]
    n = h * w
    ea, eb, ew = _grid_edges(raster)
    order = np.lexsort((eb, ea, ew))
    ea, eb, ew = ea[order], eb[order], ew[order]

    parent, rank, size = _merge_pass(n, ea, eb, ew, float(k))
    if min_size > 1:
        _absorb_small(parent, rank, size, ea, eb, min_size)
    labels, count = _relabel(parent, n)
    labels = labels.reshape(h, w)
    sizes = np.bincount(labels.ravel(), minlength=count).astype(np.int64)
    return SegmentMap(labels=labels, segment_count=count, segment_sizes=sizes)


def segment_features(frame, segmap: SegmentMap) -> SegmentFeatures:
    """Exact per-segment means/stds (population), centroid row fraction, size fraction."""
    pixels = frame.pixels if hasattr(frame, "pixels") else np.asarray(frame)
    if pixels.shape[:2] != segmap.labels.shape:
        raise ValueError(
            f"frame {pixels.shape[:2]} does not match labels {segmap.labels.shape}"
        )
    h, w = segmap.labels.shape
    labels = segmap.labels.ravel()
    f = segmap.segment_count
    counts = np.bincount(labels, minlength=f).astype(np.float64)

    vecs = np.empty((f, 8), dtype=np.float64)
    flat = pixels.reshape(-1, 3).astype(np.float64)
    for band in range(3):
        s = np.bincount(labels, weights=flat[:, band], minlength=f)
        s2 = np.bincount(labels, weights=flat[:, band] ** 2, minlength=f)
        mean = s / counts
        var = np.maximum(s2 / counts - mean**2, 0.0)
        vecs[:, band] = mean
        vecs[:, 3 + band] = np.sqrt(var)
    rows = np.repeat(np.arange(h, dtype=np.float64), w)
    vecs[:, 6] = np.bincount(labels, weights=rows, minlength=f) / counts / h
    vecs[:, 7] = counts / (h * w)
    return SegmentFeatures(vectors=vecs)


def save_labels_pgm(segmap: SegmentMap, path: str | Path) -> None:
    """Debug export: 16-bit grayscale PGM (P5, maxval 65535), label = pixel value."""
    if segmap.segment_count > 65535:
        raise ValueError(f"{segmap.segment_count} segments exceed 16-bit PGM range")
    header = f"P5\n{segmap.width} {segmap.height}\n65535\n".encode("ascii")
    payload = segmap.labels.astype(">u2").tobytes()
    Path(path).write_bytes(header + payload)


def load_labels_pgm(path: str | Path) -> SegmentMap:
    """Read back a 16-bit label PGM written by save_labels_pgm."""
    from .imagery import PpmError, _read_header_tokens

    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise PpmError(f"bad magic {data[:2]!r}, expected P5")
    (w, h, maxval), start = _read_header_tokens(data, 3, 2)
    if maxval != 65535:
        raise PpmError(f"expected maxval 65535, got {maxval}")
    expected = w * h * 2
    payload = data[start : start + expected]
    if len(payload) < expected:
        raise PpmError("truncated payload")
    labels = np.frombuffer(payload, dtype=">u2").reshape(h, w).astype(np.int32)
    count = int(labels.max()) + 1
    sizes = np.bincount(labels.ravel(), minlength=count).astype(np.int64)
    return SegmentMap(labels=labels, segment_count=count, segment_sizes=sizes)
