"""DEM ingestion, elevation queries, pixel-ray/ground intersection, footprints.

Elevation samples sit at cell centers (Esri ASCII convention, first row
northernmost). Ray/ground intersection uses an analytic fast path on exactly
constant DEMs and otherwise marches along the ray in steps of cellsize/4,
refining the first sign change by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .camera import Intrinsics, PoseParams, camera_center, rotation_matrix

BISECT_TOL = 1e-4  # m, on the ray-height-minus-terrain function


class DemError(ValueError):
    """Malformed Esri ASCII grid."""


class NoIntersectionError(ValueError):
    """Ray leaves the DEM extent or never reaches the surface."""


@dataclass(frozen=True)
class DemGrid:
    ncols: int
    nrows: int
    xll: float
    yll: float
    cellsize: float
    nodata: float
    elevations: np.ndarray  # (nrows, ncols), row 0 = northernmost

    def __post_init__(self):
        if self.ncols < 2 or self.nrows < 2:
            raise DemError(f"grid must be at least 2x2, got {self.ncols}x{self.nrows}")
        if self.cellsize <= 0:
            raise DemError(f"cellsize must be > 0, got {self.cellsize}")
        if self.elevations.shape != (self.nrows, self.ncols):
            raise DemError("elevation array does not match header dimensions")

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.elevations == self.elevations.flat[0]))

    def center_bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the rectangle spanned by cell centers."""
        x0 = self.xll + 0.5 * self.cellsize
        y0 = self.yll + 0.5 * self.cellsize
        return (
            x0,
            y0,
            x0 + (self.ncols - 1) * self.cellsize,
            y0 + (self.nrows - 1) * self.cellsize,
        )


@dataclass(frozen=True)
class GroundPoint:
    x: float
    y: float
    z: float
    u: float
    v: float


@dataclass(frozen=True)
class FootprintCell:
    u: int
    v: int
    quad: tuple[GroundPoint, GroundPoint, GroundPoint, GroundPoint]
    area: float


_HEADER_KEYS = ("ncols", "nrows", "xll", "yll", "cellsize", "nodata_value")


def load_dem(path: str | Path) -> DemGrid:
    """Parse an Esri ASCII grid (.asc); xllcenter/yllcenter shift by half a cell."""
    tokens_by_key: dict[str, float] = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 7:
        raise DemError("file too short for a 6-line header plus data")
    xll_is_center = yll_is_center = False
    for line in lines[:6]:
        parts = line.split()
        if len(parts) != 2:
            raise DemError(f"malformed header line {line!r}")
        key = parts[0].lower()
        try:
            val = float(parts[1])
        except ValueError:
            raise DemError(f"non-numeric header value in {line!r}") from None
        if key in ("xllcorner", "xllcenter"):
            xll_is_center = key == "xllcenter"
            key = "xll"
        elif key in ("yllcorner", "yllcenter"):
            yll_is_center = key == "yllcenter"
            key = "yll"
        elif key == "nodata_value":
            pass
        elif key not in ("ncols", "nrows", "cellsize"):
            raise DemError(f"unknown header key {parts[0]!r}")
        tokens_by_key[key] = val
    missing = [k for k in _HEADER_KEYS if k not in tokens_by_key]
    if missing:
        raise DemError(f"missing header keys: {missing}")

    ncols = int(tokens_by_key["ncols"])
    nrows = int(tokens_by_key["nrows"])
    cellsize = tokens_by_key["cellsize"]
    xll = tokens_by_key["xll"] - (0.5 * cellsize if xll_is_center else 0.0)
    yll = tokens_by_key["yll"] - (0.5 * cellsize if yll_is_center else 0.0)

    values = []
    for line in lines[6:]:
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise DemError(f"non-numeric elevation token {tok!r}") from None
    if len(values) != ncols * nrows:
        raise DemError(f"expected {ncols * nrows} elevation values, got {len(values)}")
    elevations = np.array(values, dtype=np.float64).reshape(nrows, ncols)
    return DemGrid(
        ncols=ncols,
        nrows=nrows,
        xll=xll,
        yll=yll,
        cellsize=cellsize,
        nodata=tokens_by_key["nodata_value"],
        elevations=elevations,
    )


def save_dem(dem: DemGrid, path: str | Path) -> None:
    lines = [
        f"ncols {dem.ncols}",
        f"nrows {dem.nrows}",
        f"xllcorner {dem.xll:.17g}",
        f"yllcorner {dem.yll:.17g}",
        f"cellsize {dem.cellsize:.17g}",
        f"NODATA_value {dem.nodata:.17g}",
    ]
    for row in dem.elevations:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


@njit(cache=True)
def _bilinear(elev, ncols, nrows, xll, yll, cellsize, nodata, x, y):
    """Bilinear interpolation over cell centers; returns NaN when unusable."""
    fx = (x - xll) / cellsize - 0.5
    fy = (y - yll) / cellsize - 0.5
    if fx < 0.0 or fy < 0.0 or fx > ncols - 1 or fy > nrows - 1:
        return np.nan
    i0 = int(fx)
    j0 = int(fy)
    if i0 >= ncols - 1:
        i0 = ncols - 2
    if j0 >= nrows - 1:
        j0 = nrows - 2
    tx = fx - i0
    ty = fy - j0
    # row 0 is northernmost: world y increases toward row 0
    r1 = nrows - 1 - j0
    r0 = r1 - 1
    z00 = elev[r1, i0]
    z10 = elev[r1, i0 + 1]
    z01 = elev[r0, i0]
    z11 = elev[r0, i0 + 1]
    if z00 == nodata or z10 == nodata or z01 == nodata or z11 == nodata:
        return np.nan
    return (
        z00 * (1 - tx) * (1 - ty)
        + z10 * tx * (1 - ty)
        + z01 * (1 - tx) * ty
        + z11 * tx * ty
    )


def elevation_at(dem: DemGrid, x: float, y: float) -> float:
    """Bilinear elevation at (x, y); errors outside bounds or near nodata."""
    z = _bilinear(
        dem.elevations, dem.ncols, dem.nrows, dem.xll, dem.yll, dem.cellsize,
        dem.nodata, float(x), float(y),
    )
    if math.isnan(z):
        xmin, ymin, xmax, ymax = dem.center_bounds()
        if not (xmin <= x <= xmax and ymin <= y <= ymax):
            raise DemError(f"({x}, {y}) outside interpolation bounds")
        raise DemError(f"nodata among the samples surrounding ({x}, {y})")
    return float(z)


def pixel_ray(
    intr: Intrinsics, pose: PoseParams, u: float, v: float
) -> tuple[np.ndarray, np.ndarray]:
    """Ray from the camera center through pixel (u, v); unit direction."""
    r = rotation_matrix(pose.omega, pose.phi, pose.kappa)
    d = r.T @ np.linalg.solve(intr.matrix, np.array([u, v, 1.0]))
    return camera_center(pose), d / np.linalg.norm(d)


@njit(cache=True)
def _march(elev, ncols, nrows, xll, yll, cellsize, nodata,
           ox, oy, oz, dx, dy, dz, max_range, step):
    """First ray/surface crossing by fixed-step march + bisection.

    Returns (t, status): status 0 ok, 1 no crossing within range/bounds.
    """
    f_prev = oz - _bilinear(elev, ncols, nrows, xll, yll, cellsize, nodata, ox, oy)
    if np.isnan(f_prev) or f_prev < 0.0:
        return 0.0, 1
    t_prev = 0.0
    t = step
    while t <= max_range:
        x = ox + t * dx
        y = oy + t * dy
        z = oz + t * dz
        zt = _bilinear(elev, ncols, nrows, xll, yll, cellsize, nodata, x, y)
        if np.isnan(zt):
            return 0.0, 1
        f = z - zt
        if f <= 0.0:
            lo, hi = t_prev, t
            f_hi = f
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = (oz + mid * dz) - _bilinear(
                    elev, ncols, nrows, xll, yll, cellsize, nodata,
                    ox + mid * dx, oy + mid * dy,
                )
                if abs(fm) < BISECT_TOL:
                    return mid, 0
                if fm > 0.0:
                    lo = mid
                else:
                    hi, f_hi = mid, fm
            return hi, 0
        t_prev = t
        f_prev = f
        t += step
    return 0.0, 1


def intersect_ground(
    origin, direction, dem: DemGrid, max_range: float = 1e4,
    u: float = 0.0, v: float = 0.0,
) -> GroundPoint:
    """First crossing of the ray with the DEM surface."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)

    if dem.is_constant:
        z0 = float(dem.elevations.flat[0])
        if o[2] <= z0:
            raise NoIntersectionError("ray origin not above the surface")
        if d[2] >= 0.0:
            raise NoIntersectionError("ray does not descend toward a constant surface")
        t = (z0 - o[2]) / d[2]
        if t > max_range:
            raise NoIntersectionError(f"intersection beyond max_range {max_range}")
        p = o + t * d
        xmin, ymin, xmax, ymax = dem.center_bounds()
        if not (xmin <= p[0] <= xmax and ymin <= p[1] <= ymax):
            raise NoIntersectionError("intersection outside DEM extent")
        return GroundPoint(x=float(p[0]), y=float(p[1]), z=z0, u=u, v=v)

    t, status = _march(
        dem.elevations, dem.ncols, dem.nrows, dem.xll, dem.yll, dem.cellsize,
        dem.nodata, o[0], o[1], o[2], d[0], d[1], d[2],
        float(max_range), dem.cellsize / 4.0,
    )
    if status != 0:
        raise NoIntersectionError("ray exits DEM bounds or never meets the surface")
    p = o + t * d
    return GroundPoint(x=float(p[0]), y=float(p[1]), z=float(p[2]), u=u, v=v)


def shoelace_area(xy: np.ndarray) -> float:
    """Planimetric polygon area (absolute), vertices in order."""
    x = xy[:, 0]
    y = xy[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def pixel_footprint(
    intr: Intrinsics, pose: PoseParams, dem: DemGrid, u: int, v: int,
    max_range: float = 1e4,
) -> FootprintCell:
    """Ground quad under pixel (u, v): rays through the 4 pixel corners."""
    corners = []
    for du, dv in ((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)):
        o, d = pixel_ray(intr, pose, u + du, v + dv)
        corners.append(intersect_ground(o, d, dem, max_range=max_range, u=u + du, v=v + dv))
    xy = np.array([[c.x, c.y] for c in corners])
    area = shoelace_area(xy)
    if area <= 0.0:
        raise NoIntersectionError(f"degenerate footprint at pixel ({u}, {v})")
    return FootprintCell(u=u, v=v, quad=tuple(corners), area=area)


def intersect_pixels(
    intr: Intrinsics, pose: PoseParams, dem: DemGrid,
    us: np.ndarray, vs: np.ndarray, max_range: float = 1e4,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ground (x, y, z) for each pixel coordinate; NaN where no intersection."""
    r = rotation_matrix(pose.omega, pose.phi, pose.kappa)
    kinv = np.linalg.inv(intr.matrix)
    origin = camera_center(pose)
    us = np.asarray(us, dtype=np.float64).ravel()
    vs = np.asarray(vs, dtype=np.float64).ravel()
    pix = np.stack([us, vs, np.ones(us.size)])
    dirs = (r.T @ (kinv @ pix)).T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    gx = np.full(us.size, np.nan)
    gy = np.full(us.size, np.nan)
    gz = np.full(us.size, np.nan)
    xmin, ymin, xmax, ymax = dem.center_bounds()
    if dem.is_constant:
        z0 = float(dem.elevations.flat[0])
        dz = dirs[:, 2]
        ok = dz < 0.0
        t = np.where(ok, (z0 - origin[2]) / np.where(ok, dz, -1.0), np.nan)
        ok &= (t > 0) & (t <= max_range)
        px = origin[0] + t * dirs[:, 0]
        py = origin[1] + t * dirs[:, 1]
        ok &= (px >= xmin) & (px <= xmax) & (py >= ymin) & (py <= ymax)
        gx[ok] = px[ok]
        gy[ok] = py[ok]
        gz[ok] = z0
    else:
        for i in range(us.size):
            try:
                gp = intersect_ground(origin, dirs[i], dem, max_range=max_range)
            except NoIntersectionError:
                continue
            gx[i], gy[i], gz[i] = gp.x, gp.y, gp.z
    return gx, gy, gz


def footprint_areas(
    intr: Intrinsics, pose: PoseParams, dem: DemGrid,
    width: int, height: int, max_range: float = 1e4,
) -> np.ndarray:
    """(height, width) array of pixel ground areas; NaN where undefined.

    Corner intersections are shared between adjacent pixels, so the grid of
    (height+1) x (width+1) corner rays is intersected once.
    """
    r = rotation_matrix(pose.omega, pose.phi, pose.kappa)
    kinv = np.linalg.inv(intr.matrix)
    origin = camera_center(pose)

    us, vs = np.meshgrid(
        np.arange(width + 1, dtype=np.float64) - 0.5,
        np.arange(height + 1, dtype=np.float64) - 0.5,
    )
    pix = np.stack([us.ravel(), vs.ravel(), np.ones(us.size)])
    dirs = (r.T @ (kinv @ pix)).T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    n = dirs.shape[0]
    gx = np.full(n, np.nan)
    gy = np.full(n, np.nan)

    xmin, ymin, xmax, ymax = dem.center_bounds()
    if dem.is_constant:
        z0 = float(dem.elevations.flat[0])
        dz = dirs[:, 2]
        ok = dz < 0.0
        t = np.where(ok, (z0 - origin[2]) / np.where(ok, dz, -1.0), np.nan)
        ok &= (t > 0) & (t <= max_range)
        px = origin[0] + t * dirs[:, 0]
        py = origin[1] + t * dirs[:, 1]
        ok &= (px >= xmin) & (px <= xmax) & (py >= ymin) & (py <= ymax)
        gx[ok] = px[ok]
        gy[ok] = py[ok]
    else:
        for i in range(n):
            try:
                gp = intersect_ground(origin, dirs[i], dem, max_range=max_range)
            except NoIntersectionError:
                continue
            gx[i] = gp.x
            gy[i] = gp.y

    gx = gx.reshape(height + 1, width + 1)
    gy = gy.reshape(height + 1, width + 1)
    x00, x10 = gx[:-1, :-1], gx[:-1, 1:]
    x11, x01 = gx[1:, 1:], gx[1:, :-1]
    y00, y10 = gy[:-1, :-1], gy[:-1, 1:]
    y11, y01 = gy[1:, 1:], gy[1:, :-1]
    areas = 0.5 * np.abs(
        x00 * y10 - x10 * y00
        + x10 * y11 - x11 * y10
        + x11 * y01 - x01 * y11
        + x01 * y00 - x00 * y01
    )
    bad = (
        np.isnan(x00) | np.isnan(x10) | np.isnan(x11) | np.isnan(x01) | (areas <= 0.0)
    )
    areas[bad] = np.nan
    return areas
