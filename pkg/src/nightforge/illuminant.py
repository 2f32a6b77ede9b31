"""Scene illuminant estimation and white balance application.

Two estimators cover the pipeline's two AWB passes: Gray World on linear
RAW-domain RGB early on, and a Grayness Index pass on the processed image
near the end. Both produce an Illuminant holding per-channel gains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .colorspace import _as_float
from .errors import DegenerateImageError, DimensionMismatchError, ImageTooSmallError

_MEAN_FLOOR = 1e-8
_LOG_EPS = 1e-6


@dataclass(frozen=True)
class Illuminant:
    """Per-channel multiplicative white balance corrections."""

    gains: tuple

    def __post_init__(self):
        g = tuple(float(v) for v in self.gains)
        if len(g) != 3 or not all(np.isfinite(v) and v > 0 for v in g):
            raise DegenerateImageError(f"illuminant gains must be 3 finite positives, got {g}")
        object.__setattr__(self, "gains", g)

    def as_array(self, dtype=np.float64) -> np.ndarray:
        return np.asarray(self.gains, dtype=dtype)


def gray_world_estimate(img: np.ndarray) -> Illuminant:
    """Gray World: gains pull every channel mean onto the green mean.

    Green-anchored (g_G = 1) so overall exposure is untouched. Channel means
    are floored at 1e-8 to keep ratios finite on nearly-black channels.
    """
    if img.ndim != 3 or img.shape[-1] != 3 or img[..., 0].size == 0:
        raise DegenerateImageError(f"expected nonempty (H, W, 3) image, got {img.shape}")
    means = np.asarray([float(img[..., c].mean(dtype=np.float64)) for c in range(3)])
    if np.all(means <= _MEAN_FLOOR):
        raise DegenerateImageError(f"channel means {means.tolist()} all below {_MEAN_FLOOR}")
    means = np.maximum(means, _MEAN_FLOOR)
    gains = means[1] / means
    return Illuminant(gains=tuple(gains))


def apply_gains(img: np.ndarray, ill: Illuminant) -> np.ndarray:
    """out_c = clamp(in_c * g_c, 0, 1)."""
    data = _as_float(img)
    return np.clip(data * ill.as_array(dtype=data.dtype), 0.0, 1.0)


def grayness_index_estimate(img: np.ndarray, blur_sigma: float = 0.5,
                            select_fraction: float = 0.001,
                            saturation_threshold: float = 0.98,
                            score: str = "hypot") -> Illuminant:
    """Grayness Index white balance estimate on a processed RGB image.

    Per-pixel grayness score: magnitude of the Gaussian-smoothed gradients of
    log(R/G) and log(B/G); log-chromaticity cancels luminance, so the score
    reacts to chroma structure only. The illuminant is the mean RGB over the
    lowest-scoring (grayest) pixels; gains are its inversion normalized to a
    maximum component of exactly 1. Saturated pixels never enter the gray set.
    """
    if img.ndim != 3 or img.shape[-1] != 3:
        raise DegenerateImageError(f"expected (H, W, 3) image, got {img.shape}")
    rows, cols = img.shape[:2]
    if rows < 16 or cols < 16:
        raise ImageTooSmallError(f"grayness index needs >= 16x16 pixels, got {rows}x{cols}")

    rgb = np.maximum(np.asarray(img, dtype=np.float64), _LOG_EPS)
    log_rg = np.log(rgb[..., 0] / rgb[..., 1])
    log_bg = np.log(rgb[..., 2] / rgb[..., 1])
    mags = []
    for plane in (log_rg, log_bg):
        blurred = ndimage.gaussian_filter(plane, sigma=blur_sigma, mode="reflect")
        gy, gx = np.gradient(blurred)
        mags.append(gy * gy + gx * gx)
    if score == "hypot":
        gi = np.sqrt(mags[0] + mags[1])
    elif score == "sum":
        gi = np.sqrt(mags[0]) + np.sqrt(mags[1])
    else:
        raise ValueError(f"unknown grayness score {score!r}")

    valid = np.asarray(img, dtype=np.float64).max(axis=-1) < saturation_threshold
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise DegenerateImageError("no unsaturated pixels to estimate grayness from")
    n_select = max(1, int(round(n_valid * select_fraction)))
    flat_scores = np.where(valid, gi, np.inf).ravel()
    chosen = np.argsort(flat_scores, kind="stable")[:n_select]
    estimate = np.asarray(img, dtype=np.float64).reshape(-1, 3)[chosen].mean(axis=0)
    estimate = np.maximum(estimate, _MEAN_FLOOR)
    gains = estimate.min() / estimate
    return Illuminant(gains=tuple(gains))


def estimate_on_clean_apply_to_blended(clean: np.ndarray, blended: np.ndarray,
                                       **gi_kwargs) -> np.ndarray:
    """Estimate the illuminant on the denoised image, correct the blended one.

    The grayness score is gradient-based and amplifies residual noise, so the
    estimate comes from the clean (fully denoised) image even though the
    correction lands on the detail-preserving blend.
    """
    if clean.shape != blended.shape:
        raise DimensionMismatchError(f"shape mismatch: {clean.shape} vs {blended.shape}")
    ill = grayness_index_estimate(clean, **gi_kwargs)
    return apply_gains(blended, ill)
