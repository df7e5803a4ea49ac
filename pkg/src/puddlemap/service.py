"""JSON-over-HTTP service exposing the operations the annotation UI needs.

All numerical work happens in the library modules; handlers only translate
between JSON and library types, so responses match CLI output field for
field. Domain errors map to HTTP 422 with machine-readable codes mirroring
the CLI exit reasons; malformed bodies are 400/422 via validation.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from . import camera as cam
from . import imagery, pipeline, segmenter, terrain
from . import tree as tree_mod
from .config import PipelineConfig
from .seeds import Label, SeedConflictError, SeedError, SeedPoint, SeedSet
from .terrain import DemError


def rle_encode(arr: np.ndarray) -> list[list[int]]:
    """Row-major run-length encoding: [[value, run], ...]."""
    flat = np.asarray(arr).ravel()
    if flat.size == 0:
        return []
    change = np.nonzero(np.diff(flat))[0] + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [flat.size]])
    return [[int(flat[s]), int(e - s)] for s, e in zip(starts, ends)]


def rle_decode(runs: list[list[int]], width: int, height: int) -> np.ndarray:
    total = sum(r[1] for r in runs)
    if total != width * height:
        raise ValueError(f"RLE covers {total} pixels, expected {width * height}")
    out = np.empty(width * height, dtype=np.int64)
    pos = 0
    for value, count in runs:
        out[pos : pos + count] = value
        pos += count
    return out.reshape(height, width)


class SeedIn(BaseModel):
    row: int
    col: int
    label: str


class SegmentRequest(BaseModel):
    frame_id: str
    sigma: float | None = None
    k: float | None = None
    min_size: int | None = None


class ClassifyRequest(BaseModel):
    frame_id: str
    seeds: list[SeedIn]
    sigma: float | None = None
    k: float | None = None
    min_size: int | None = None
    max_depth: int | None = None
    min_leaf: int | None = None


class CameraIn(BaseModel):
    fx: float
    fy: float
    cx: float
    cy: float
    omega: float
    phi: float
    kappa: float
    tx: float
    ty: float
    tz: float


class GcpIn(BaseModel):
    u: float
    v: float
    x: float
    y: float
    z: float


class ResectRequest(BaseModel):
    gcps: list[GcpIn]
    init: CameraIn
    fix_intrinsics: bool = False
    max_iter: int = 200
    tol: float = 1e-12


class GeorefRequest(BaseModel):
    mask_rle: list[list[int]] = Field(default_factory=list)
    width: int
    height: int
    include_dry: bool = False


def _domain_error(code: str, message: str, **extra):
    return HTTPException(status_code=422, detail={"code": code, "message": message, **extra})


def create_app(cfg: PipelineConfig) -> FastAPI:
    app = FastAPI(title="puddlemap", version="0.1.0")

    def frame_by_id(frame_id: str) -> imagery.Frame:
        seq = imagery.load_sequence(cfg.frames_dir)
        for ts, path in seq:
            if path.stem == frame_id:
                return pipeline.load_cropped(cfg, ts, path)
        raise HTTPException(status_code=404, detail={"code": "frame_not_found",
                                                     "message": frame_id})

    def effective(req, key):
        val = getattr(req, key, None)
        return getattr(cfg, key) if val is None else val

    @app.get("/frame/{frame_id}")
    def get_frame(frame_id: str) -> Response:
        frame = frame_by_id(frame_id)
        header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
        return Response(content=header + frame.pixels.tobytes(),
                        media_type="image/x-portable-pixmap")

    @app.post("/segment")
    def post_segment(req: SegmentRequest):
        frame = frame_by_id(req.frame_id)
        smoothed = imagery.gaussian_blur(frame, effective(req, "sigma"))
        segmap = segmenter.felzenszwalb(
            smoothed, k=effective(req, "k"), min_size=effective(req, "min_size")
        )
        return {
            "width": segmap.width,
            "height": segmap.height,
            "segment_count": segmap.segment_count,
            "labels_rle": rle_encode(segmap.labels),
        }

    @app.post("/classify")
    def post_classify(req: ClassifyRequest):
        frame = frame_by_id(req.frame_id)
        try:
            points = tuple(
                SeedPoint(row=s.row, col=s.col, label=Label(s.label.lower()))
                for s in req.seeds
            )
            seeds = SeedSet(points=points)
        except (ValueError, SeedError) as e:
            raise _domain_error("bad_seeds", str(e)) from None
        smoothed = imagery.gaussian_blur(frame, effective(req, "sigma"))
        segmap = segmenter.felzenszwalb(
            smoothed, k=effective(req, "k"), min_size=effective(req, "min_size")
        )
        feats = segmenter.segment_features(frame, segmap)
        try:
            training = pipeline.seeds_to_training(seeds, segmap, feats)
            t = tree_mod.train(
                training,
                max_depth=effective(req, "max_depth"),
                min_leaf=effective(req, "min_leaf"),
            )
            mask = tree_mod.classify_frame(t, segmap, feats, seeds)
        except SeedConflictError as e:
            raise _domain_error("seed_conflict", str(e), segment_id=e.segment_id) from None
        except SeedError as e:
            raise _domain_error("bad_seeds", str(e)) from None
        except ValueError as e:
            raise _domain_error("bad_training_set", str(e)) from None
        return {
            "width": mask.wet.shape[1],
            "height": mask.wet.shape[0],
            "mask_rle": rle_encode(mask.wet.astype(np.uint8)),
            "conflicts": [],
            "single_class_warning": t.single_class_warning,
        }

    @app.post("/resect")
    def post_resect(req: ResectRequest):
        init_intr = cam.Intrinsics(fx=req.init.fx, fy=req.init.fy,
                                   cx=req.init.cx, cy=req.init.cy)
        init_pose = cam.PoseParams(omega=req.init.omega, phi=req.init.phi,
                                   kappa=req.init.kappa, tx=req.init.tx,
                                   ty=req.init.ty, tz=req.init.tz)
        gcps = [cam.Gcp(u=g.u, v=g.v, x=g.x, y=g.y, z=g.z) for g in req.gcps]
        try:
            result = cam.resect(
                gcps, (init_intr, init_pose),
                fix_intrinsics=req.fix_intrinsics,
                max_iter=req.max_iter, tol=req.tol,
            )
        except cam.ResectionError as e:
            code = "too_few_gcps" if "GCPs" in str(e) else "degenerate_gcps"
            raise _domain_error(code, str(e)) from None
        return {
            "intrinsics": {
                "fx": result.intrinsics.fx, "fy": result.intrinsics.fy,
                "cx": result.intrinsics.cx, "cy": result.intrinsics.cy,
            },
            "pose": {
                "omega": result.pose.omega, "phi": result.pose.phi,
                "kappa": result.pose.kappa, "tx": result.pose.tx,
                "ty": result.pose.ty, "tz": result.pose.tz,
            },
            "residuals": [[float(a), float(b)] for a, b in result.residuals],
            "rmse": result.rmse,
            "iterations": result.iterations,
            "converged": result.converged,
            "behind_camera": list(result.behind_camera),
        }

    @app.get("/elevation")
    def get_elevation(x: float, y: float):
        dem = terrain.load_dem(cfg.dem)
        try:
            z = terrain.elevation_at(dem, x, y)
        except DemError as e:
            raise _domain_error("elevation_unavailable", str(e)) from None
        return {"x": x, "y": y, "z": z}

    @app.post("/georef")
    def post_georef(req: GeorefRequest):
        try:
            wet = rle_decode(req.mask_rle, req.width, req.height) != 0
        except ValueError as e:
            raise _domain_error("bad_rle", str(e)) from None
        mask = tree_mod.WaterMask(wet=wet)
        areas = pipeline.footprint_map(cfg, req.width, req.height)
        gx, gy, gz = pipeline.ground_grid(cfg, req.width, req.height)
        t = cfg.roi_tuple()
        offset = (t[0], t[1]) if t else (0, 0)
        return pipeline.georef_geojson(mask, gx, gy, gz, areas,
                                       include_dry=req.include_dry,
                                       roi_offset=offset)

    return app
