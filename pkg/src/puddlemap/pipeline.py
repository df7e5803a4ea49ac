"""Shared orchestration between the CLI commands and the HTTP service."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import camera as cam
from . import imagery, metrics, segmenter, terrain, tree
from .config import PipelineConfig
from .imagery import Frame, Roi
from .seeds import SeedSet, load_seeds, seeds_to_training
from .segmenter import FEATURE_NAMES, SegmentFeatures, SegmentMap


def roi_for(cfg: PipelineConfig, frame: Frame) -> Roi:
    t = cfg.roi_tuple()
    if t is None:
        return Roi(x0=0, y0=0, w=frame.width, h=frame.height)
    return Roi(x0=t[0], y0=t[1], w=t[2], h=t[3])


def segment_frame(frame: Frame, cfg: PipelineConfig) -> tuple[SegmentMap, SegmentFeatures]:
    smoothed = imagery.gaussian_blur(frame, cfg.sigma)
    segmap = segmenter.felzenszwalb(smoothed, k=cfg.k, min_size=cfg.min_size)
    feats = segmenter.segment_features(frame, segmap)
    return segmap, feats


def representative_entry(seq: imagery.FrameSequence, cfg: PipelineConfig):
    """(timestamp, path) of the representative frame; defaults to the first."""
    if not len(seq):
        raise FileNotFoundError(f"no frames found in {cfg.frames_dir}")
    if not cfg.representative_frame:
        return seq.entries[0]
    for ts, path in seq:
        if path.stem == cfg.representative_frame:
            return ts, path
    raise FileNotFoundError(
        f"representative frame {cfg.representative_frame!r} not in {cfg.frames_dir}"
    )


def load_cropped(cfg: PipelineConfig, ts: float, path: Path) -> Frame:
    frame = imagery.load_frame(path, timestamp=ts)
    return imagery.crop(frame, roi_for(cfg, frame))


def save_features_csv(feats: SegmentFeatures, path: Path) -> None:
    lines = ["segment," + ",".join(FEATURE_NAMES)]
    for i, v in enumerate(feats.vectors):
        lines.append(f"{i}," + ",".join(f"{x:.17g}" for x in v))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def save_mask_pgm(mask: tree.WaterMask, path: Path) -> None:
    """Binary PGM (P5, maxval 255), wet = 255."""
    h, w = mask.wet.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    payload = (mask.wet.astype(np.uint8) * 255).tobytes()
    path.write_bytes(header + payload)


def load_mask_pgm(path: Path, timestamp: float | None = None) -> tree.WaterMask:
    from .imagery import PpmError, _read_header_tokens

    data = path.read_bytes()
    if data[:2] != b"P5":
        raise PpmError(f"bad magic {data[:2]!r}, expected P5")
    (w, h, maxval), start = _read_header_tokens(data, 3, 2)
    if maxval != 255:
        raise PpmError(f"expected maxval 255, got {maxval}")
    payload = data[start : start + w * h]
    if len(payload) < w * h:
        raise PpmError("truncated payload")
    wet = np.frombuffer(payload, dtype=np.uint8).reshape(h, w) != 0
    return tree.WaterMask(wet=wet, timestamp=timestamp)


def train_tree(cfg: PipelineConfig, seeds: SeedSet,
               segmap: SegmentMap, feats: SegmentFeatures) -> tree.DecisionTree:
    ts = seeds_to_training(seeds, segmap, feats)
    return tree.train(ts, max_depth=cfg.max_depth, min_leaf=cfg.min_leaf)


def classify_sequence(cfg: PipelineConfig):
    """Yield (timestamp, WaterMask) for every frame of the sequence."""
    seq = imagery.load_sequence(cfg.frames_dir)
    rep_ts, rep_path = representative_entry(seq, cfg)
    rep = load_cropped(cfg, rep_ts, rep_path)
    roi = Roi(x0=0, y0=0, w=rep.width, h=rep.height)
    seeds = load_seeds(cfg.seeds, roi)

    shared_tree = None
    if cfg.training_mode == "train-once":
        segmap, feats = segment_frame(rep, cfg)
        shared_tree = train_tree(cfg, seeds, segmap, feats)
    elif cfg.training_mode != "per-frame":
        raise ValueError(f"unknown training_mode {cfg.training_mode!r}")

    for ts, path in seq:
        frame = load_cropped(cfg, ts, path)
        segmap, feats = segment_frame(frame, cfg)
        t = shared_tree if shared_tree is not None else train_tree(cfg, seeds, segmap, feats)
        yield ts, tree.classify_frame(t, segmap, feats, seeds, timestamp=ts), t


def footprint_map(cfg: PipelineConfig, width: int, height: int) -> np.ndarray:
    intr, pose = cam.load_camera(cfg.camera)
    dem = terrain.load_dem(cfg.dem)
    t = cfg.roi_tuple()
    x0, y0 = (t[0], t[1]) if t else (0, 0)
    # ROI pixel (0,0) is full-frame pixel (x0,y0): shift the principal point
    shifted = cam.Intrinsics(fx=intr.fx, fy=intr.fy, cx=intr.cx - x0, cy=intr.cy - y0)
    return terrain.footprint_areas(shifted, pose, dem, width, height,
                                   max_range=cfg.max_range)


def ground_grid(cfg: PipelineConfig, width: int, height: int):
    """Pixel-center ground coordinates (x, y, z) over the ROI."""
    intr, pose = cam.load_camera(cfg.camera)
    dem = terrain.load_dem(cfg.dem)
    t = cfg.roi_tuple()
    x0, y0 = (t[0], t[1]) if t else (0, 0)
    uu, vv = np.meshgrid(np.arange(width) + x0, np.arange(height) + y0)
    gx, gy, gz = terrain.intersect_pixels(intr, pose, dem, uu, vv,
                                          max_range=cfg.max_range)
    shape = (height, width)
    return gx.reshape(shape), gy.reshape(shape), gz.reshape(shape)


def georef_geojson(
    mask: tree.WaterMask,
    gx: np.ndarray, gy: np.ndarray, gz: np.ndarray,
    areas: np.ndarray,
    include_dry: bool = False,
    roi_offset: tuple[int, int] = (0, 0),
) -> dict:
    """FeatureCollection of per-pixel ground points with area properties."""
    h, w = mask.wet.shape
    x0, y0 = roi_offset
    defined = np.isfinite(areas) & np.isfinite(gx)
    select = defined if include_dry else (defined & mask.wet)
    features = []
    for r, c in zip(*np.nonzero(select)):
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [float(gx[r, c]), float(gy[r, c])],
                },
                "properties": {
                    "z": float(gz[r, c]),
                    "u": int(c + x0),
                    "v": int(r + y0),
                    "area_m2": float(areas[r, c]),
                    "wet": bool(mask.wet[r, c]),
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def write_geojson(doc: dict, path: Path) -> None:
    path.write_text(
        json.dumps(doc, separators=(",", ":"), sort_keys=True) + "\n",
        encoding="utf-8", newline="\n",
    )


def sofi_series(samples: list[metrics.SofiSample]) -> tuple[metrics.TimeSeries, metrics.TimeSeries]:
    times = np.array([s.timestamp for s in samples])
    pix = np.array([s.pixel_sofi for s in samples])
    proj = np.array([s.projected_sofi for s in samples])
    return (
        metrics.TimeSeries(times=times, values=pix, unit="ratio"),
        metrics.TimeSeries(times=times, values=proj, unit="ratio"),
    )
