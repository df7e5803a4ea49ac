"""Line-based `key = value` pipeline configuration.

Every key can be overridden by a same-named CLI flag (`--sigma 1.2`).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    """Unknown key or malformed value in a config file or override."""


@dataclass
class PipelineConfig:
    # paths
    frames_dir: str = "frames"
    seeds: str = "seeds.csv"
    gcps: str = "gcps.csv"
    dem: str = "dem.asc"
    camera: str = "camera.txt"
    camera_init: str = "camera_init.txt"
    well: str = "well.csv"
    output_dir: str = "out"
    # segmentation
    sigma: float = 0.8
    k: float = 300.0
    min_size: int = 20
    # classifier
    max_depth: int = 8
    min_leaf: int = 1
    training_mode: str = "train-once"  # or "per-frame"
    # seed grid convenience
    grid_nx: int = 12
    grid_ny: int = 9
    # analytics
    smooth_window: float = 300.0
    max_lag: float = 900.0
    # roi as "x0,y0,w,h"; empty = full frame
    roi: str = ""
    representative_frame: str = ""
    mount_height: float = 2.0
    # resection
    fix_intrinsics: bool = False
    resect_max_iter: int = 200
    resect_tol: float = 1e-12
    max_range: float = 1e4

    def roi_tuple(self) -> tuple[int, int, int, int] | None:
        if not self.roi:
            return None
        parts = self.roi.split(",")
        if len(parts) != 4:
            raise ConfigError(f"roi must be x0,y0,w,h, got {self.roi!r}")
        x0, y0, w, h = (int(p) for p in parts)
        return x0, y0, w, h

    def out(self, *parts: str) -> Path:
        p = Path(self.output_dir).joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(key: str, raw: str):
    ftype = _FIELD_TYPES.get(key)
    if ftype is None:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    if ftype == "bool":
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(raw)
    return raw


def load_config(path: str | Path) -> PipelineConfig:
    cfg = PipelineConfig()
    base = Path(path).parent
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key = key.strip()
        setattr(cfg, key, _coerce(key, val))
    # path entries are resolved relative to the config file
    for key in ("frames_dir", "seeds", "gcps", "dem", "camera", "camera_init",
                "well", "output_dir"):
        val = getattr(cfg, key)
        if val and not Path(val).is_absolute():
            setattr(cfg, key, str(base / val))
    return cfg


def apply_overrides(cfg: PipelineConfig, overrides: dict[str, str]) -> PipelineConfig:
    for key, raw in overrides.items():
        setattr(cfg, key, _coerce(key, raw))
    return cfg
