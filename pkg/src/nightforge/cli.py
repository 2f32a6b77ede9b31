"""Batch-oriented command line front end.

Subcommands: render (one frame), batch (a directory of frames, parallel
across frames), bench (timing table over repeated runs), inspect (per-stage
histogram dumps). Frames are PNG/JSON pairs named <stem>.png / <stem>.json.
Exit codes: 0 success, 1 processing failure, 2 usage error. The env var
NIGHTFORGE_THREADS caps batch workers; per-frame work is single-threaded,
so thread count never changes pixel output.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import PipelineConfig
from .errors import NightforgeError
from .frame_io import load_raw, save_jpeg
from .pipeline import emit_stage_histograms, emit_timing_csv, emit_timing_table, run_pipeline

EXIT_OK = 0
EXIT_PROCESSING = 1
EXIT_USAGE = 2


def worker_count() -> int:
    value = os.environ.get("NIGHTFORGE_THREADS", "").strip()
    if value:
        try:
            n = int(value)
        except ValueError:
            raise ValueError(f"NIGHTFORGE_THREADS must be an integer, got {value!r}") from None
        if n < 1:
            raise ValueError(f"NIGHTFORGE_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def _load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig.defaults()
    return PipelineConfig.from_file(path)


def _meta_path(png_path: Path, explicit) -> Path:
    return Path(explicit) if explicit else png_path.with_suffix(".json")


def _render_one(png_path: Path, json_path: Path, out_path: Path, cfg: PipelineConfig) -> None:
    try:
        frame = load_raw(png_path, json_path)
    except (OSError, NightforgeError) as exc:
        raise RuntimeError(f"stage 'frame_io': {exc}") from exc
    result, _ = run_pipeline(frame, cfg)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_jpeg(result.data, out_path, quality=cfg.jpeg_quality)


def _cmd_render(args) -> int:
    cfg = _load_config(args.config)
    _render_one(Path(args.png), Path(args.meta), Path(args.output), cfg)
    print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_batch(args) -> int:
    cfg = _load_config(args.config)
    in_dir = Path(args.input_dir)
    out_dir = Path(args.output_dir)
    if not in_dir.is_dir():
        raise RuntimeError(f"stage 'frame_io': input directory not found: {in_dir}")
    pairs = []
    for png in sorted(in_dir.glob("*.png")):
        meta = png.with_suffix(".json")
        if meta.is_file():
            pairs.append((png, meta))
    if not pairs:
        raise RuntimeError(f"stage 'frame_io': no PNG/JSON frame pairs in {in_dir}")

    failures = []

    def job(pair):
        png, meta = pair
        out = out_dir / (png.stem + ".jpg")
        try:
            _render_one(png, meta, out, cfg)
            return png.name, None
        except Exception as exc:
            return png.name, str(exc)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        for name, error in pool.map(job, pairs):
            if error is None:
                print(f"ok   {name}")
            else:
                failures.append((name, error))
                print(f"FAIL {name}: {error}", file=sys.stderr)
    if failures:
        print(f"{len(failures)} of {len(pairs)} frames failed", file=sys.stderr)
        return EXIT_PROCESSING
    print(f"rendered {len(pairs)} frames into {out_dir}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    png = Path(args.png)
    frame = _load_frame_for(png, args.meta)
    runs = []
    for _ in range(args.runs):
        _, reports = run_pipeline(frame, cfg)
        runs.append(reports)
    print(emit_timing_table(runs))
    if args.csv:
        Path(args.csv).write_text(emit_timing_csv(runs) + "\n", encoding="utf-8")
        print(f"wrote {args.csv}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    cfg = _load_config(args.config)
    png = Path(args.png)
    frame = _load_frame_for(png, args.meta)
    _, reports = run_pipeline(frame, cfg, capture_histograms=True)
    out_dir = Path(args.output) if args.output else png.with_name(png.stem + "_stages")
    written = emit_stage_histograms(reports, out_dir)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _load_frame_for(png: Path, meta_arg):
    json_path = _meta_path(png, meta_arg)
    try:
        return load_raw(png, json_path)
    except (OSError, NightforgeError) as exc:
        raise RuntimeError(f"stage 'frame_io': {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nightforge",
        description="Render night-photography RAW frames (16-bit PNG + JSON metadata) to JPEG.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="render a single frame")
    p_render.add_argument("png", help="16-bit RAW PNG")
    p_render.add_argument("meta", help="metadata JSON")
    p_render.add_argument("-o", "--output", required=True, help="output JPEG path")
    p_render.add_argument("--config", help="pipeline config file")
    p_render.set_defaults(func=_cmd_render)

    p_batch = sub.add_parser("batch", help="render every PNG/JSON pair in a directory")
    p_batch.add_argument("input_dir")
    p_batch.add_argument("-o", "--output-dir", required=True)
    p_batch.add_argument("--config", help="pipeline config file")
    p_batch.set_defaults(func=_cmd_batch)

    p_bench = sub.add_parser("bench", help="per-stage timing table over repeated runs")
    p_bench.add_argument("png", help="16-bit RAW PNG (metadata defaults to <stem>.json)")
    p_bench.add_argument("--meta", help="metadata JSON (default: sibling of the PNG)")
    p_bench.add_argument("--runs", type=int, default=10, help="number of runs to average")
    p_bench.add_argument("--csv", help="also write the table as CSV")
    p_bench.add_argument("--config", help="pipeline config file")
    p_bench.set_defaults(func=_cmd_bench)

    p_inspect = sub.add_parser("inspect", help="dump per-stage histograms and a summary page")
    p_inspect.add_argument("png", help="16-bit RAW PNG (metadata defaults to <stem>.json)")
    p_inspect.add_argument("--meta", help="metadata JSON (default: sibling of the PNG)")
    p_inspect.add_argument("-o", "--output", help="output directory (default: <stem>_stages)")
    p_inspect.add_argument("--config", help="pipeline config file")
    p_inspect.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        if args.command == "bench" and args.runs < 1:
            parser.error("--runs must be >= 1")
        return args.func(args)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    except (RuntimeError, NightforgeError, OSError, ValueError) as exc:
        print(f"nightforge: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())
