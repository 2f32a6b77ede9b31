"""Full rendering pipeline: stage order, timing, and diagnostics.

The stage list is fixed: four preliminary RAW-preparation steps followed by
the low-light processing chain. Each stage is timed individually and can
capture 256-bin luma histograms before and after itself for step-by-step
inspection of what the tonal corrections do.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .colorspace import (
    ENCODED_SRGB,
    ImagePlanar,
    camera_to_srgb,
    gamma_encode,
    luma,
    normalize_raw,
    quantize_8bit,
    rgb_to_ycbcr,
    ycbcr_to_rgb,
)
from .config import PipelineConfig
from .demosaic import CfaLayout, demosaic_bilinear
from .denoise import BlendParams, blend_masked, bm3d, classify_noise, nlm
from .errors import PipelineStageError
from .frame_io import RawFrame, apply_orientation, resize_to_output
from .illuminant import apply_gains, estimate_on_clean_apply_to_blended, gray_world_estimate
from .local_contrast import run_lcc
from .tone import (
    Histogram256,
    apply_stretch,
    black_point_correct,
    saturation_enhance,
    stretch_range,
    unsharp_mask,
)

PRELIMINARY_STAGES = ("normalize", "demosaic", "gray_world_awb", "camera_to_srgb")
LOW_LIGHT_STAGES = (
    "lcc",
    "contrast_stretch",
    "saturation_enhance",
    "black_point",
    "global_gamma",
    "unsharp",
    "quantize_8bit",
    "resize",
    "denoise",
    "detail_blend",
    "gi_awb",
    "orientation",
)
STAGE_NAMES = PRELIMINARY_STAGES + LOW_LIGHT_STAGES


@dataclass
class StageReport:
    name: str
    seconds: float
    hist_before: np.ndarray = None
    hist_after: np.ndarray = None


def _hist_bins(img) -> np.ndarray:
    if not isinstance(img, np.ndarray):
        return None
    plane = luma(img) if img.ndim == 3 else img
    return Histogram256.from_plane(plane).bins


def run_pipeline(frame: RawFrame, cfg: PipelineConfig = None,
                 capture_histograms: bool = False):
    """Render one RAW frame; returns (final image, per-stage reports)."""
    cfg = (cfg if cfg is not None else PipelineConfig()).validate()
    # frame-level determinism: intra-frame work stays single-threaded,
    # parallelism belongs to the batch layer
    cv2.setNumThreads(1)

    meta = frame.meta
    rule = cfg.dark_rule()
    ctx = {}

    def ycbcr_planes(rgb):
        if "y_after" not in ctx:
            ycc = rgb_to_ycbcr(rgb)
            ctx["y_before"] = ycc[..., 0]
            ctx["y_after"] = ycc[..., 0]
            ctx["cb"] = ycc[..., 1]
            ctx["cr"] = ycc[..., 2]
        return ctx["y_before"], ctx["y_after"], ctx["cb"], ctx["cr"]

    def do_lcc(rgb):
        ycc = rgb_to_ycbcr(rgb)
        # copy: res.y_in must survive the in-place luma replacement below
        res = run_lcc(np.ascontiguousarray(ycc[..., 0]), cfg.lcc_mask_sigma)
        ctx["y_before"] = res.y_in
        ctx["y_after"] = res.y_out
        ctx["cb"] = ycc[..., 1]
        ctx["cr"] = ycc[..., 2]
        ycc[..., 0] = res.y_out
        return np.clip(ycbcr_to_rgb(ycc), 0.0, 1.0)

    def do_stretch(rgb):
        y_before, y_after, cb, cr = ycbcr_planes(rgb)
        rng = stretch_range(
            y_before, y_after, rule, cb=cb, cr=cr,
            chroma_mode=cfg.chroma_mode, clip_limit=cfg.stretch_clip_limit,
        )
        stretched = apply_stretch(y_after, rng)
        ycc = np.stack([stretched, cb, cr], axis=-1)
        return np.clip(ycbcr_to_rgb(ycc), 0.0, 1.0)

    def do_saturation(rgb):
        y_before, y_after, _, _ = ycbcr_planes(rgb)
        return saturation_enhance(rgb, y_before, y_after, cfg.saturation_variant)

    def do_denoise(rgb):
        ctx["noisy"] = rgb
        if cfg.denoiser == "none":
            ctx["denoised"] = rgb
            return rgb
        noise = classify_noise(meta.noise_profile, cfg.noise_thresholds, cfg.noise_sigmas)
        if cfg.denoiser == "bm3d":
            def run(plane_or_rgb):
                return bm3d(plane_or_rgb, noise.sigma)
        else:
            def run(plane_or_rgb):
                return nlm(plane_or_rgb, noise.sigma, cfg.nlm_patch_size,
                           cfg.nlm_search_size, cfg.nlm_h_factor)
        if cfg.denoise_channels == "luma":
            ycc = rgb_to_ycbcr(rgb)
            ycc[..., 0] = run(np.ascontiguousarray(ycc[..., 0]))
            out = np.clip(ycbcr_to_rgb(ycc), 0.0, 1.0)
        else:
            out = run(rgb)
        ctx["denoised"] = out
        return out

    def do_blend(denoised):
        noisy = ctx.get("noisy", denoised)
        params = BlendParams(u=cfg.blend_u, mask_sigma=cfg.blend_mask_sigma)
        return blend_masked(denoised, noisy, params)

    def do_gi(blended):
        clean = ctx.get("denoised", blended)
        return estimate_on_clean_apply_to_blended(
            clean, blended,
            blur_sigma=cfg.gi_blur_sigma,
            select_fraction=cfg.gi_select_fraction,
            score=cfg.gi_score,
        )

    stages = [
        ("normalize", True, lambda fr: normalize_raw(fr, dtype=np.float32)),
        ("demosaic", True,
         lambda mosaic: demosaic_bilinear(mosaic, CfaLayout.from_pattern(meta.cfa_pattern))),
        ("gray_world_awb", True, lambda rgb: apply_gains(rgb, gray_world_estimate(rgb))),
        ("camera_to_srgb", True, lambda rgb: camera_to_srgb(rgb, meta)),
        ("lcc", cfg.enable_lcc, do_lcc),
        ("contrast_stretch", cfg.enable_stretch, do_stretch),
        ("saturation_enhance", cfg.enable_saturation, do_saturation),
        ("black_point", cfg.enable_black_point,
         lambda rgb: black_point_correct(rgb, cfg.black_point_percentile, cfg.black_point_mode)),
        ("global_gamma", cfg.enable_global_gamma,
         lambda rgb: gamma_encode(rgb, cfg.global_gamma)),
        ("unsharp", cfg.enable_unsharp,
         lambda rgb: unsharp_mask(rgb, cfg.unsharp_sigma, cfg.unsharp_amount)),
        ("quantize_8bit", cfg.enable_quantize, quantize_8bit),
        ("resize", cfg.enable_resize,
         lambda rgb: resize_to_output(rgb, meta, cfg.output_spec(), cfg.resize_interpolation)),
        ("denoise", cfg.enable_denoise, do_denoise),
        ("detail_blend", cfg.enable_blend, do_blend),
        ("gi_awb", cfg.enable_gi_awb, do_gi),
        ("orientation", cfg.enable_orientation,
         lambda rgb: apply_orientation(rgb, meta.orientation)),
    ]

    img = frame
    reports = []
    for name, enabled, fn in stages:
        if not enabled:
            continue
        before = _hist_bins(img) if capture_histograms else None
        start = time.perf_counter()
        try:
            img = fn(img)
        except Exception as exc:
            raise PipelineStageError(name, exc) from exc
        elapsed = time.perf_counter() - start
        after = _hist_bins(img) if capture_histograms else None
        reports.append(StageReport(name=name, seconds=elapsed,
                                   hist_before=before, hist_after=after))
    return ImagePlanar(data=img, space=ENCODED_SRGB), reports


def _mean_times(runs):
    if runs and isinstance(runs[0], StageReport):
        runs = [runs]
    if not runs or not runs[0]:
        raise ValueError("need at least one run with at least one stage")
    order = []
    sums = {}
    counts = {}
    for run in runs:
        for rep in run:
            if rep.name not in sums:
                order.append(rep.name)
                sums[rep.name] = 0.0
                counts[rep.name] = 0
            sums[rep.name] += rep.seconds
            counts[rep.name] += 1
    means = {name: sums[name] / counts[name] for name in order}
    return order, means, len(runs)


def emit_timing_table(runs) -> str:
    """Human-readable per-stage timing, grouped and with shares of total."""
    order, means, n_runs = _mean_times(runs)
    total = sum(means.values())

    def pct(value):
        return 100.0 * value / total if total > 0 else 0.0

    groups = (
        ("Preliminary steps", [n for n in order if n in PRELIMINARY_STAGES]),
        ("Low-light specific steps", [n for n in order if n not in PRELIMINARY_STAGES]),
    )
    width = max(len(n) for n in order) + 2
    lines = [f"Stage timing (mean of {n_runs} run{'s' if n_runs != 1 else ''})", ""]
    for title, names in groups:
        if not names:
            continue
        lines.append(title)
        subtotal = 0.0
        for name in names:
            subtotal += means[name]
            lines.append(f"  {name:<{width}}{means[name]:10.4f} s  {pct(means[name]):6.2f}%")
        lines.append(f"  {'subtotal':<{width}}{subtotal:10.4f} s  {pct(subtotal):6.2f}%")
    lines.append(f"{'Total':<{width + 2}}{total:10.4f} s  {pct(total):6.2f}%")
    return "\n".join(lines)


def emit_timing_csv(runs) -> str:
    order, means, _ = _mean_times(runs)
    total = sum(means.values())
    rows = ["group,stage,mean_seconds,percent"]
    for name in order:
        group = "preliminary" if name in PRELIMINARY_STAGES else "low_light"
        share = 100.0 * means[name] / total if total > 0 else 0.0
        rows.append(f"{group},{name},{means[name]:.6f},{share:.2f}")
    rows.append(f"total,total,{total:.6f},100.00" if total > 0 else "total,total,0.000000,0.00")
    return "\n".join(rows)


def emit_stage_histograms(reports, out_dir) -> list:
    """One bin,count CSV per stage plus a rendered summary page."""
    if not reports or any(rep.hist_after is None for rep in reports):
        raise ValueError("histogram capture was not enabled for this run")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for index, rep in enumerate(reports):
        path = out_dir / f"{index:02d}_{rep.name}.csv"
        rows = ["bin,count"]
        rows += [f"{b},{int(c)}" for b, c in enumerate(rep.hist_after)]
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        written.append(path)

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols = 4
    n = len(reports)
    nrows = (n + cols - 1) // cols
    fig, axes = plt.subplots(nrows, cols, figsize=(4 * cols, 2.6 * nrows), squeeze=False)
    for ax in axes.ravel():
        ax.set_visible(False)
    for index, rep in enumerate(reports):
        ax = axes[index // cols][index % cols]
        ax.set_visible(True)
        ax.fill_between(np.arange(256), rep.hist_after, step="mid", color="#3a6ea5")
        ax.set_title(f"{index:02d} {rep.name}", fontsize=9)
        ax.set_yticks([])
        ax.set_xlim(0, 255)
    fig.tight_layout()
    summary = out_dir / "summary.png"
    fig.savefig(summary, dpi=110)
    plt.close(fig)
    written.append(summary)
    return written
