"""Pinhole projection and monoplotting resection.

The projection is p_img ~ K R (X + T): T is a world-frame additive
translation, so the camera center is -T. Rotation is parametrized by
omega/phi/kappa Euler angles with R = Rz(kappa) Ry(phi) Rx(omega).
Resection runs Levenberg-Marquardt on the GCP reprojection error with a
central-finite-difference Jacobian.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

W_EPS = 1e-9
BEHIND_PENALTY = 1e6  # px, pushes the optimizer away from behind-camera poses


class BehindCameraError(ValueError):
    """Point at or behind the projection plane."""


class ResectionError(ValueError):
    """Unusable GCP configuration (too few points or degenerate geometry)."""


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be > 0, got fx={self.fx}, fy={self.fy}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class PoseParams:
    omega: float
    phi: float
    kappa: float
    tx: float
    ty: float
    tz: float


@dataclass(frozen=True)
class Gcp:
    u: float
    v: float
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class ResectionResult:
    intrinsics: Intrinsics
    pose: PoseParams
    residuals: np.ndarray  # (n, 2) px
    rmse: float
    iterations: int
    converged: bool
    behind_camera: tuple[int, ...] = ()  # GCP indices behind the final pose


def rotation_matrix(omega: float, phi: float, kappa: float) -> np.ndarray:
    """R = Rz(kappa) Ry(phi) Rx(omega), right-handed elementary rotations."""
    co, so = math.cos(omega), math.sin(omega)
    cp, sp = math.cos(phi), math.sin(phi)
    ck, sk = math.cos(kappa), math.sin(kappa)
    rx = np.array([[1, 0, 0], [0, co, -so], [0, so, co]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[ck, -sk, 0], [sk, ck, 0], [0, 0, 1]])
    return rz @ ry @ rx


def project(intr: Intrinsics, pose: PoseParams, p) -> tuple[float, float]:
    """Project world point p to pixel (u, v); raises behind the camera."""
    q = rotation_matrix(pose.omega, pose.phi, pose.kappa) @ (
        np.asarray(p, dtype=np.float64) + np.array([pose.tx, pose.ty, pose.tz])
    )
    uvw = intr.matrix @ q
    if uvw[2] <= W_EPS:
        raise BehindCameraError(f"point {tuple(p)} has w = {uvw[2]:.3g}")
    return float(uvw[0] / uvw[2]), float(uvw[1] / uvw[2])


def camera_center(pose: PoseParams) -> np.ndarray:
    """World point mapped to the origin of the camera frame: -T."""
    return -np.array([pose.tx, pose.ty, pose.tz])


def wrap_angle(a: float) -> float:
    """Wrap into (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def _params_to_camera(p: np.ndarray, fix: Intrinsics | None):
    if fix is None:
        intr = Intrinsics(fx=p[0], fy=p[1], cx=p[2], cy=p[3])
        pose = PoseParams(*p[4:10])
    else:
        intr = fix
        pose = PoseParams(*p[0:6])
    return intr, pose


def _residuals(p: np.ndarray, fix, world: np.ndarray, image: np.ndarray) -> np.ndarray:
    """Flat residual vector (2n,); behind-camera points get a large penalty."""
    intr, pose = _params_to_camera(p, fix)
    r = rotation_matrix(pose.omega, pose.phi, pose.kappa)
    q = (world + np.array([pose.tx, pose.ty, pose.tz])) @ r.T
    uvw = q @ intr.matrix.T
    out = np.empty_like(image)
    ok = uvw[:, 2] > W_EPS
    out[ok] = image[ok] - uvw[ok, :2] / uvw[ok, 2:3]
    out[~ok] = BEHIND_PENALTY
    return out.ravel()


def _jacobian(p: np.ndarray, fix, world, image) -> np.ndarray:
    """Central finite differences, step max(1e-6, 1e-6*|param|)."""
    n = p.size
    j = np.empty((world.shape[0] * 2, n))
    for i in range(n):
        h = max(1e-6, 1e-6 * abs(p[i]))
        lo, hi = p.copy(), p.copy()
        lo[i] -= h
        hi[i] += h
        j[:, i] = (_residuals(hi, fix, world, image) - _residuals(lo, fix, world, image)) / (
            2.0 * h
        )
    return j


def resect(
    gcps: list[Gcp],
    init: tuple[Intrinsics, PoseParams],
    fix_intrinsics: bool = False,
    max_iter: int = 200,
    tol: float = 1e-12,
    cost_trace: list | None = None,
) -> ResectionResult:
    """Recover camera parameters minimizing GCP reprojection error (LM)."""
    n_params = 6 if fix_intrinsics else 10
    min_gcps = math.ceil(n_params / 2) + 1
    if len(gcps) < min_gcps:
        raise ResectionError(
            f"need >= {min_gcps} GCPs for {n_params} parameters, got {len(gcps)}"
        )
    world = np.array([[g.x, g.y, g.z] for g in gcps])
    image = np.array([[g.u, g.v] for g in gcps])
    centered = world - world.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-2] < 1e-9 * sv[0]:
        raise ResectionError("world points are (near-)collinear")

    intr0, pose0 = init
    fix = intr0 if fix_intrinsics else None
    if fix_intrinsics:
        p = np.array([pose0.omega, pose0.phi, pose0.kappa, pose0.tx, pose0.ty, pose0.tz])
    else:
        p = np.array(
            [intr0.fx, intr0.fy, intr0.cx, intr0.cy,
             pose0.omega, pose0.phi, pose0.kappa, pose0.tx, pose0.ty, pose0.tz]
        )

    r = _residuals(p, fix, world, image)
    cost = float(r @ r)
    if cost_trace is not None:
        cost_trace.append(cost)
    lam = 1e-3
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        j = _jacobian(p, fix, world, image)
        jtj = j.T @ j
        g = j.T @ r
        accepted = False
        while not accepted:
            damp = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                step = np.linalg.solve(damp, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                if lam > 1e12:
                    break
                continue
            p_new = p + step
            r_new = _residuals(p_new, fix, world, image)
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                accepted = True
                lam = max(lam / 10.0, 1e-12)
                rel = (cost - cost_new) / cost if cost > 0 else 0.0
                p, r, cost = p_new, r_new, cost_new
                if cost_trace is not None:
                    cost_trace.append(cost)
                if rel < tol:
                    converged = True
            else:
                lam *= 10.0
                if lam > 1e12:
                    break
        if not accepted:
            break
        if converged:
            break

    intr, pose = _params_to_camera(p, fix)
    pose = PoseParams(
        omega=wrap_angle(pose.omega),
        phi=wrap_angle(pose.phi),
        kappa=wrap_angle(pose.kappa),
        tx=pose.tx,
        ty=pose.ty,
        tz=pose.tz,
    )
    behind = []
    resid = np.empty((len(gcps), 2))
    for i, g in enumerate(gcps):
        try:
            uv = project(intr, pose, (g.x, g.y, g.z))
            resid[i] = (g.u - uv[0], g.v - uv[1])
        except BehindCameraError:
            resid[i] = BEHIND_PENALTY
            behind.append(i)
    rmse = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
    return ResectionResult(
        intrinsics=intr,
        pose=pose,
        residuals=resid,
        rmse=rmse,
        iterations=iterations,
        converged=converged,
        behind_camera=tuple(behind),
    )


def load_gcps(path: str | Path) -> list[Gcp]:
    """Parse gcps.csv (header u,v,X,Y,Z)."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["u", "v", "x", "y", "z"]:
        raise ValueError(f"expected header u,v,X,Y,Z, got {header}")
    gcps = []
    for rec in reader:
        if not rec:
            continue
        if len(rec) != 5:
            raise ValueError(f"expected 5 fields, got {rec}")
        u, v, x, y, z = map(float, rec)
        gcps.append(Gcp(u=u, v=v, x=x, y=y, z=z))
    return gcps


def save_gcps(gcps: list[Gcp], path: str | Path) -> None:
    lines = ["u,v,X,Y,Z"]
    lines += [f"{g.u:.17g},{g.v:.17g},{g.x:.17g},{g.y:.17g},{g.z:.17g}" for g in gcps]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


CAMERA_KEYS = ("fx", "fy", "cx", "cy", "omega", "phi", "kappa", "tx", "ty", "tz")


def save_camera(intr: Intrinsics, pose: PoseParams, path: str | Path) -> None:
    """camera.txt: key = value lines, 17 significant digits."""
    values = {
        "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
        "omega": pose.omega, "phi": pose.phi, "kappa": pose.kappa,
        "tx": pose.tx, "ty": pose.ty, "tz": pose.tz,
    }
    lines = [f"{k} = {values[k]:.17g}" for k in CAMERA_KEYS]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_camera(path: str | Path) -> tuple[Intrinsics, PoseParams]:
    values = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        values[key.strip()] = float(val)
    missing = [k for k in CAMERA_KEYS if k not in values]
    if missing:
        raise ValueError(f"camera file missing keys: {missing}")
    intr = Intrinsics(fx=values["fx"], fy=values["fy"], cx=values["cx"], cy=values["cy"])
    pose = PoseParams(
        omega=values["omega"], phi=values["phi"], kappa=values["kappa"],
        tx=values["tx"], ty=values["ty"], tz=values["tz"],
    )
    return intr, pose
