"""Sparse seed grids, seed CSV I/O, and assembly of the per-segment training set."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .imagery import Roi
from .segmenter import SegmentFeatures, SegmentMap


class Label(Enum):
    DRY = "dry"
    WET = "wet"
    UNLABELED = "unlabeled"


class SeedError(ValueError):
    """Invalid seed data (position, duplicate, or label token)."""


class SeedConflictError(ValueError):
    """A segment contains both DRY and WET seeds; segmentation too coarse."""

    def __init__(self, segment_id: int):
        self.segment_id = segment_id
        super().__init__(
            f"segment {segment_id} contains both dry and wet seeds; "
            "increase segmentation resolution (lower k) or move the seeds"
        )


@dataclass(frozen=True)
class SeedPoint:
    """One seed at ROI-relative (row, col)."""

    row: int
    col: int
    label: Label


@dataclass(frozen=True)
class SeedSet:
    points: tuple[SeedPoint, ...]

    def __post_init__(self):
        seen = set()
        for p in self.points:
            if (p.row, p.col) in seen:
                raise SeedError(f"duplicate seed position ({p.row}, {p.col})")
            seen.add((p.row, p.col))

    @property
    def l(self) -> int:
        return len(self.points)

    @property
    def l1(self) -> int:
        return sum(1 for p in self.points if p.label is Label.DRY)

    @property
    def l2(self) -> int:
        return sum(1 for p in self.points if p.label is Label.WET)

    @property
    def l0(self) -> int:
        return self.l - self.l1 - self.l2

    def labeled(self) -> list[SeedPoint]:
        return [p for p in self.points if p.label is not Label.UNLABELED]


@dataclass(frozen=True)
class TrainingSet:
    """One (feature 8-vector, label) example per seeded segment."""

    features: np.ndarray  # (n, 8) float64
    labels: tuple[Label, ...]  # DRY/WET only
    segment_ids: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.labels)


def make_grid(roi: Roi, nx: int, ny: int) -> SeedSet:
    """nx x ny unlabeled seeds at cell centers of the ROI."""
    if nx < 1 or ny < 1:
        raise SeedError(f"grid counts must be >= 1, got {nx}x{ny}")
    points = []
    for j in range(ny):
        row = roi.y0 + round((j + 0.5) * roi.h / ny)
        for i in range(nx):
            col = roi.x0 + round((i + 0.5) * roi.w / nx)
            points.append(SeedPoint(row=row, col=col, label=Label.UNLABELED))
    if len({(p.row, p.col) for p in points}) != len(points):
        raise SeedError(f"grid {nx}x{ny} denser than roi {roi.w}x{roi.h}")
    return SeedSet(points=tuple(points))


def load_seeds(path: str | Path, roi: Roi) -> SeedSet:
    """Parse seeds.csv (header row,col,label); coordinates are ROI-relative."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["row", "col", "label"]:
        raise SeedError(f"expected header row,col,label, got {header}")
    points = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != 3:
            raise SeedError(f"line {lineno}: expected 3 fields, got {len(rec)}")
        row, col = int(rec[0]), int(rec[1])
        token = rec[2].strip().lower()
        try:
            label = Label(token)
        except ValueError:
            raise SeedError(f"line {lineno}: unknown label {rec[2]!r}") from None
        if not (0 <= row < roi.h and 0 <= col < roi.w):
            raise SeedError(
                f"line {lineno}: seed ({row}, {col}) outside roi {roi.w}x{roi.h}"
            )
        points.append(SeedPoint(row=row, col=col, label=label))
    return SeedSet(points=tuple(points))


def save_seeds(seeds: SeedSet, path: str | Path) -> None:
    """Write seeds.csv with LF line endings."""
    lines = ["row,col,label"]
    lines += [f"{p.row},{p.col},{p.label.value}" for p in seeds.points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def seeds_to_training(
    seeds: SeedSet, segmap: SegmentMap, feats: SegmentFeatures
) -> TrainingSet:
    """Map labeled seeds onto segments; one example per labeled segment.

    Raises SeedConflictError if a segment receives both labels.
    """
    seg_label: dict[int, Label] = {}
    for p in seeds.labeled():
        if not (0 <= p.row < segmap.height and 0 <= p.col < segmap.width):
            raise SeedError(f"seed ({p.row}, {p.col}) outside segment map")
        sid = int(segmap.labels[p.row, p.col])
        prev = seg_label.get(sid)
        if prev is not None and prev is not p.label:
            raise SeedConflictError(sid)
        seg_label[sid] = p.label
    ids = sorted(seg_label)
    features = feats.vectors[ids] if ids else np.empty((0, 8))
    return TrainingSet(
        features=features,
        labels=tuple(seg_label[i] for i in ids),
        segment_ids=tuple(ids),
    )
