"""Shared synthetic-scene builders for the test suite."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from numba import njit

from puddlemap import camera as cam
from puddlemap import imagery, terrain
from puddlemap.imagery import Frame


def oblique_camera(
    fx=400.0, fy=400.0, cx=160.0, cy=90.0,
    height=6.0, pitch_down=0.5, phi=0.0, kappa=0.0, tx=0.0, ty=0.0,
):
    """Camera `height` meters above z=0, looking +y, pitched down by `pitch_down`."""
    intr = cam.Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy)
    pose = cam.PoseParams(
        omega=math.pi / 2 + pitch_down, phi=phi, kappa=kappa,
        tx=tx, ty=ty, tz=-height,
    )
    return intr, pose


def random_camera(rng: np.random.Generator, width=1920, height=1072):
    """Random plausible street camera with all of a target volume in front."""
    intr = cam.Intrinsics(
        fx=float(rng.uniform(800, 2000)),
        fy=float(rng.uniform(800, 2000)),
        cx=width / 2 + float(rng.uniform(-50, 50)),
        cy=height / 2 + float(rng.uniform(-50, 50)),
    )
    pose = cam.PoseParams(
        omega=math.pi / 2 + float(rng.uniform(0.2, 0.8)),
        phi=float(rng.uniform(-0.2, 0.2)),
        kappa=float(rng.uniform(-0.2, 0.2)),
        tx=float(rng.uniform(-5, 5)),
        ty=float(rng.uniform(-5, 5)),
        tz=float(rng.uniform(-15, -4)),
    )
    return intr, pose


def synthetic_gcps(intr, pose, rng: np.random.Generator, n=8,
                   width=1920, height=1072, noise=0.0):
    """GCPs generated by forward projection of in-view points."""
    r = cam.rotation_matrix(pose.omega, pose.phi, pose.kappa)
    kinv = np.linalg.inv(intr.matrix)
    origin = cam.camera_center(pose)
    gcps = []
    for _ in range(n):
        u = float(rng.uniform(0.05 * width, 0.95 * width))
        v = float(rng.uniform(0.05 * height, 0.95 * height))
        d = r.T @ (kinv @ np.array([u, v, 1.0]))
        d /= np.linalg.norm(d)
        t = float(rng.uniform(10, 60))
        p = origin + t * d
        uo, vo = cam.project(intr, pose, p)
        gcps.append(cam.Gcp(
            u=uo + float(rng.normal(0, noise)) if noise else uo,
            v=vo + float(rng.normal(0, noise)) if noise else vo,
            x=float(p[0]), y=float(p[1]), z=float(p[2]),
        ))
    return gcps


def perturbed_init(intr, pose, rng: np.random.Generator,
                   d_angle=0.05, d_pos=2.0, d_focal=0.05):
    init_intr = cam.Intrinsics(
        fx=intr.fx * (1 + float(rng.uniform(-d_focal, d_focal))),
        fy=intr.fy * (1 + float(rng.uniform(-d_focal, d_focal))),
        cx=intr.cx, cy=intr.cy,
    )
    init_pose = cam.PoseParams(
        omega=pose.omega + float(rng.uniform(-d_angle, d_angle)),
        phi=pose.phi + float(rng.uniform(-d_angle, d_angle)),
        kappa=pose.kappa + float(rng.uniform(-d_angle, d_angle)),
        tx=pose.tx + float(rng.uniform(-d_pos, d_pos)),
        ty=pose.ty + float(rng.uniform(-d_pos, d_pos)),
        tz=pose.tz + float(rng.uniform(-d_pos, d_pos)),
    )
    return init_intr, init_pose


def flat_dem(z=0.0, ncols=8, nrows=8, cellsize=10.0, xll=-40.0, yll=-40.0):
    return terrain.DemGrid(
        ncols=ncols, nrows=nrows, xll=xll, yll=yll, cellsize=cellsize,
        nodata=-9999.0, elevations=np.full((nrows, ncols), float(z)),
    )


def undulating_dem(rng: np.random.Generator, n=32, cellsize=10.0,
                   amplitude=1.5, xll=0.0, yll=0.0):
    """Smooth random surface; slopes stay well below 45 degrees."""
    xs = np.arange(n) * cellsize
    xx, yy = np.meshgrid(xs, xs)
    elev = np.zeros((n, n))
    for _ in range(4):
        kx, ky = rng.uniform(-0.02, 0.02, 2)
        ph = rng.uniform(0, 2 * math.pi)
        elev += (amplitude / 4) * np.sin(kx * xx + ky * yy + ph)
    return terrain.DemGrid(
        ncols=n, nrows=n, xll=xll, yll=yll, cellsize=cellsize,
        nodata=-9999.0, elevations=elev,
    )


@njit(cache=True)
def _fine_march(elev, ncols, nrows, xll, yll, cellsize, nodata,
                ox, oy, oz, dx, dy, dz, step, max_t):
    t = 0.0
    while t < max_t:
        z = terrain._bilinear(
            elev, ncols, nrows, xll, yll, cellsize, nodata,
            ox + t * dx, oy + t * dy,
        )
        if np.isnan(z):
            return -1.0
        if oz + t * dz - z <= 0.0:
            return t
        t += step
    return -1.0


def fine_march_t(dem, origin, d, step, max_t):
    """Brute-force first-crossing parameter; -1 when no crossing is found."""
    return _fine_march(
        dem.elevations, dem.ncols, dem.nrows, dem.xll, dem.yll, dem.cellsize,
        dem.nodata, origin[0], origin[1], origin[2], d[0], d[1], d[2],
        step, max_t,
    )


ACCEPTANCE_RESULTS: list[str] = []


def record_criterion(number: int, description: str, ok: bool, detail: str = ""):
    """Log one pass/fail line per acceptance criterion, then assert."""
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    ACCEPTANCE_RESULTS.append(f"criterion {number:2d} {status} - {description}{suffix}")
    assert ok, f"criterion {number} failed: {description}{suffix}"


DRY_COLOR = (150, 140, 120)
WET_COLOR = (40, 60, 90)


def scene_frame(width=320, height=180, wet_rows=(20, 60), wet_cols=(60, 260),
                timestamp=None) -> Frame:
    """Two-tone frame: dry pavement with a wet rectangle near the top (far field)."""
    px = np.empty((height, width, 3), dtype=np.uint8)
    px[:] = DRY_COLOR
    r0, r1 = wet_rows
    c0, c1 = wet_cols
    px[r0:r1, c0:c1] = WET_COLOR
    return Frame(pixels=px, timestamp=timestamp)


def wet_extent(i: int, n_frames: int, lo=30, hi=120) -> int:
    """Rise-then-fall wet-band height over the sequence."""
    peak = n_frames // 3
    if i <= peak:
        frac = i / max(peak, 1)
    else:
        frac = max(0.0, 1 - (i - peak) / max(n_frames - 1 - peak, 1))
    return int(lo + (hi - lo) * frac)


def write_scene(
    root: Path, n_frames=12, width=320, height=180, dt=30.0,
    camera_height=6.0, pitch_down=0.5,
) -> dict:
    """Full on-disk fixture: frames, seeds, dem, camera, gcps, well, config."""
    frames_dir = root / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    extents = []
    for i in range(n_frames):
        ts = i * dt
        extent = wet_extent(i, n_frames)
        frame = scene_frame(width, height, wet_rows=(20, 20 + extent))
        imagery.save_frame(frame, frames_dir / f"{ts:g}.ppm")
        extents.append(extent)

    # 16 permanent-dry + 92 permanent-wet seeds; wet band rows [20, 50) always wet
    seed_lines = ["row,col,label"]
    for i in range(16):
        seed_lines.append(f"{170 - (i % 4)},{10 + i * 19},dry")
    k = 0
    for r in range(22, 48, 2):
        for c in range(70, 250, 22):
            if k < 92:
                seed_lines.append(f"{r},{c},wet")
                k += 1
    assert k == 92
    (root / "seeds.csv").write_text("\n".join(seed_lines) + "\n")

    intr, pose = oblique_camera(height=camera_height, pitch_down=pitch_down)
    cam.save_camera(intr, pose, root / "camera.txt")
    dem = flat_dem()
    terrain.save_dem(dem, root / "dem.asc")

    rng = np.random.default_rng(7)
    gcps = synthetic_gcps(intr, pose, rng, n=8, width=width, height=height)
    cam.save_gcps(gcps, root / "gcps.csv")
    init = perturbed_init(intr, pose, rng, d_angle=0.02, d_pos=0.5, d_focal=0.02)
    cam.save_camera(init[0], init[1], root / "camera_init.txt")

    # well depth series at 5-min cadence, peak shifted late
    span = n_frames * dt
    wt = np.arange(0.0, span + 1, 300.0)
    depth = 0.3 + 0.25 * np.exp(-(((wt - 0.55 * span) / (0.25 * span)) ** 2))
    well_lines = ["timestamp,depth_m"]
    well_lines += [f"{t:g},{d:.6f}" for t, d in zip(wt, depth)]
    (root / "well.csv").write_text("\n".join(well_lines) + "\n")

    config = "\n".join([
        "frames_dir = frames",
        "seeds = seeds.csv",
        "gcps = gcps.csv",
        "dem = dem.asc",
        "camera = camera.txt",
        "camera_init = camera_init.txt",
        "well = well.csv",
        "output_dir = out",
        "sigma = 0.8",
        "k = 300",
        "min_size = 20",
        "max_depth = 6",
        "min_leaf = 1",
        "training_mode = train-once",
        "smooth_window = 300",
        "max_lag = 900",
        "mount_height = 2.0",
    ]) + "\n"
    (root / "pipeline.cfg").write_text(config)

    return {
        "root": root,
        "frames_dir": frames_dir,
        "config": root / "pipeline.cfg",
        "intr": intr,
        "pose": pose,
        "dem": dem,
        "extents": extents,
        "n_frames": n_frames,
        "width": width,
        "height": height,
        "dt": dt,
    }
