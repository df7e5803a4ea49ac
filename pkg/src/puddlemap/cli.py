"""Command-line entry point.

    puddlemap <segment|classify|resect|georef|sofi|correlate|serve>
              --config <path> [--key value ...]

Exit codes: 0 ok, 2 input error, 3 processing error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import camera as cam
from . import imagery, metrics, pipeline, segmenter
from .config import ConfigError, PipelineConfig, apply_overrides, load_config
from .imagery import PpmError, RoiError
from .seeds import SeedConflictError, SeedError
from .terrain import DemError, NoIntersectionError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROCESSING = 3

INPUT_ERRORS = (
    FileNotFoundError,
    NotADirectoryError,
    PpmError,
    RoiError,
    DemError,
    SeedError,
    ConfigError,
    cam.ResectionError,
)
PROCESSING_ERRORS = (
    SeedConflictError,
    NoIntersectionError,
    metrics.SeriesError,
)


def cmd_segment(cfg: PipelineConfig) -> int:
    seq = imagery.load_sequence(cfg.frames_dir)
    if not len(seq):
        raise FileNotFoundError(f"no frames in {cfg.frames_dir}")
    for ts, path in seq:
        frame = pipeline.load_cropped(cfg, ts, path)
        segmap, feats = pipeline.segment_frame(frame, cfg)
        segmenter.save_labels_pgm(segmap, cfg.out("segments", f"{path.stem}.pgm"))
        pipeline.save_features_csv(feats, cfg.out("segments", f"{path.stem}.features.csv"))
    return EXIT_OK


def cmd_classify(cfg: PipelineConfig) -> int:
    rows = ["timestamp,wet_pixels,total_pixels"]
    for ts, mask, _tree in pipeline.classify_sequence(cfg):
        stem = f"{ts:g}" if ts == int(ts) else f"{ts}"
        pipeline.save_mask_pgm(mask, cfg.out("masks", f"{stem}.pgm"))
        rows.append(f"{ts:.17g},{int(mask.wet.sum())},{mask.wet.size}")
    cfg.out("masks", "summary.csv").write_text(
        "\n".join(rows) + "\n", encoding="utf-8", newline="\n"
    )
    return EXIT_OK


def cmd_resect(cfg: PipelineConfig) -> int:
    gcps = cam.load_gcps(cfg.gcps)
    init = cam.load_camera(cfg.camera_init)
    result = cam.resect(
        gcps, init,
        fix_intrinsics=cfg.fix_intrinsics,
        max_iter=cfg.resect_max_iter,
        tol=cfg.resect_tol,
    )
    out_camera = Path(cfg.camera)
    out_camera.parent.mkdir(parents=True, exist_ok=True)
    cam.save_camera(result.intrinsics, result.pose, out_camera)
    lines = ["u,v,X,Y,Z,res_u,res_v"]
    for g, r in zip(gcps, result.residuals):
        lines.append(
            f"{g.u:.17g},{g.v:.17g},{g.x:.17g},{g.y:.17g},{g.z:.17g},"
            f"{r[0]:.17g},{r[1]:.17g}"
        )
    cfg.out("residuals.csv").write_text("\n".join(lines) + "\n", encoding="utf-8",
                                        newline="\n")
    print(f"rmse = {result.rmse:.17g} px, iterations = {result.iterations}, "
          f"converged = {result.converged}")
    return EXIT_OK


def _mask_files(cfg: PipelineConfig) -> list[tuple[float, Path]]:
    masks_dir = Path(cfg.output_dir) / "masks"
    if not masks_dir.is_dir():
        raise FileNotFoundError(f"masks directory not found: {masks_dir}; run classify")
    entries = []
    for p in masks_dir.glob("*.pgm"):
        entries.append((float(p.stem), p))
    entries.sort(key=lambda e: e[0])
    if not entries:
        raise FileNotFoundError(f"no mask PGMs in {masks_dir}")
    return entries


def cmd_georef(cfg: PipelineConfig, include_dry: bool = False) -> int:
    entries = _mask_files(cfg)
    first = pipeline.load_mask_pgm(entries[0][1])
    h, w = first.wet.shape
    areas = pipeline.footprint_map(cfg, w, h)
    gx, gy, gz = pipeline.ground_grid(cfg, w, h)
    t = cfg.roi_tuple()
    offset = (t[0], t[1]) if t else (0, 0)
    for ts, path in entries:
        mask = pipeline.load_mask_pgm(path, timestamp=ts)
        doc = pipeline.georef_geojson(mask, gx, gy, gz, areas,
                                      include_dry=include_dry, roi_offset=offset)
        n_excluded = int(np.sum(~np.isfinite(areas)))
        if n_excluded:
            print(f"{path.stem}: {n_excluded} pixels without defined footprint excluded")
        pipeline.write_geojson(doc, cfg.out("georef", f"{path.stem}.geojson"))
    return EXIT_OK


def cmd_sofi(cfg: PipelineConfig) -> int:
    entries = _mask_files(cfg)
    first = pipeline.load_mask_pgm(entries[0][1])
    h, w = first.wet.shape
    areas = pipeline.footprint_map(cfg, w, h)
    samples = []
    for ts, path in entries:
        mask = pipeline.load_mask_pgm(path, timestamp=ts)
        samples.append(metrics.sofi_sample(mask, areas))
    metrics.save_sofi_csv(samples, cfg.out("sofi.csv"))
    return EXIT_OK


def cmd_correlate(cfg: PipelineConfig) -> int:
    samples = metrics.load_sofi_csv(Path(cfg.output_dir) / "sofi.csv")
    if not samples:
        raise FileNotFoundError("sofi.csv is empty; run sofi first")
    _pix, proj = pipeline.sofi_series(samples)
    extent = metrics.moving_average(proj, cfg.smooth_window)
    well = metrics.load_well_csv(cfg.well, mount_height=cfg.mount_height)
    report = metrics.phase_report(extent, well, max_lag=cfg.max_lag,
                                  smooth_window=cfg.smooth_window)
    metrics.save_phase_report(report, cfg.out("phase_report.txt"))
    if report.rising_r is None or report.falling_r is None:
        print("warning: correlation undefined over a phase (constant series)")
    return EXIT_OK


def cmd_serve(cfg: PipelineConfig, port: int) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(cfg), host="127.0.0.1", port=port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="puddlemap", description=__doc__)
    parser.add_argument("command", choices=[
        "segment", "classify", "resect", "georef", "sofi", "correlate", "serve",
    ])
    parser.add_argument("--config", required=True, help="pipeline config file")
    parser.add_argument("--all", action="store_true",
                        help="georef: include dry pixels")
    parser.add_argument("--port", type=int, default=8000, help="serve: TCP port")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)

    overrides = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or i + 1 >= len(extra):
            parser.error(f"unrecognized argument {tok!r}")
        overrides[tok[2:].replace("-", "_")] = extra[i + 1]
        i += 2

    try:
        cfg = apply_overrides(load_config(args.config), overrides)
        if args.command == "segment":
            return cmd_segment(cfg)
        if args.command == "classify":
            return cmd_classify(cfg)
        if args.command == "resect":
            return cmd_resect(cfg)
        if args.command == "georef":
            return cmd_georef(cfg, include_dry=args.all)
        if args.command == "sofi":
            return cmd_sofi(cfg)
        if args.command == "correlate":
            return cmd_correlate(cfg)
        if args.command == "serve":
            return cmd_serve(cfg, args.port)
    except INPUT_ERRORS as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except PROCESSING_ERRORS as e:
        print(f"processing error: {e}", file=sys.stderr)
        return EXIT_PROCESSING
    except (ValueError, OSError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
