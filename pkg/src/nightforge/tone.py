"""Global tone corrections applied after local contrast correction.

Everything histogram-shaped here runs on 256 bins: values in [0, 1] map to
bin round(v * 255), and percentiles are nearest-rank lookups on those bins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .colorspace import _as_float
from .errors import DimensionMismatchError

N_BINS = 256


@dataclass
class Histogram256:
    bins: np.ndarray
    cumulative: np.ndarray

    @classmethod
    def from_plane(cls, plane: np.ndarray) -> "Histogram256":
        idx = np.round(np.clip(plane, 0.0, 1.0) * (N_BINS - 1)).astype(np.int64)
        bins = np.bincount(idx.ravel(), minlength=N_BINS)
        return cls(bins=bins, cumulative=np.cumsum(bins))

    @property
    def total(self) -> int:
        return int(self.cumulative[-1])

    def percentile_bin(self, percentile: float) -> int:
        """Nearest-rank percentile: first bin whose cumulative count covers it."""
        threshold = percentile / 100.0 * self.total
        return int(np.searchsorted(self.cumulative, threshold, side="left"))


@dataclass(frozen=True)
class StretchRange:
    lo: int
    hi: int
    clip_limit: int = 50

    def __post_init__(self):
        if not 0 <= self.lo < self.hi <= N_BINS - 1:
            raise ValueError(f"stretch range [{self.lo}, {self.hi}] invalid")
        if self.lo > self.clip_limit or (N_BINS - 1 - self.hi) > self.clip_limit:
            raise ValueError(
                f"stretch range [{self.lo}, {self.hi}] clips more than {self.clip_limit} bins"
            )


@dataclass(frozen=True)
class DarkPixelRule:
    y_threshold: float = 0.14
    cr_threshold: float = 0.07

    def __post_init__(self):
        if not (0.0 < self.y_threshold < 1.0 and 0.0 < self.cr_threshold < 1.0):
            raise ValueError(f"dark-pixel thresholds outside (0,1): {self}")


def chroma_radius(cb, cr, mode: str = "magnitude"):
    """Distance of (Cb, Cr) from the neutral axis.

    "magnitude" folds both deviations to absolute values so blue and red
    casts count alike; "literal" keeps the signed sum, under which opposite
    casts can cancel. Accepts scalars or arrays.
    """
    cb = np.asarray(cb)
    cr = np.asarray(cr)
    if mode == "magnitude":
        out = (np.abs(cb - 0.5) * 2.0 + np.abs(cr - 0.5) * 2.0) / 2.0
    elif mode == "literal":
        out = ((cb - 0.5) * 2.0 + (cr - 0.5) * 2.0) / 2.0
    else:
        raise ValueError(f"unknown chroma radius mode {mode!r}")
    return out if out.ndim else out.item()


def dark_mask(y: np.ndarray, cb: np.ndarray, cr: np.ndarray,
              rule: DarkPixelRule = DarkPixelRule(), mode: str = "magnitude") -> np.ndarray:
    radius = chroma_radius(cb, cr, mode=mode)
    return (y < rule.y_threshold) & (radius < rule.cr_threshold)


def count_dark(ycbcr: np.ndarray, rule: DarkPixelRule = DarkPixelRule(),
               mode: str = "magnitude") -> int:
    """Count pixels that are both dim and chroma-neutral."""
    mask = dark_mask(ycbcr[..., 0], ycbcr[..., 1], ycbcr[..., 2], rule, mode)
    return int(mask.sum())


def _bin_at_count(y: np.ndarray, selector: np.ndarray, fraction: float) -> int:
    """First bin where the cumulative histogram of y[selector] reaches
    fraction of the selected population; empty selections resolve to bin 0."""
    hist = Histogram256.from_plane(y[selector]) if selector.any() else None
    if hist is None:
        return 0
    threshold = fraction * hist.total
    return int(np.searchsorted(hist.cumulative, threshold, side="left"))


def stretch_range(y_before: np.ndarray, y_after: np.ndarray,
                  rule: DarkPixelRule = DarkPixelRule(),
                  cb: np.ndarray = None, cr: np.ndarray = None,
                  chroma_mode: str = "magnitude", clip_limit: int = 50) -> StretchRange:
    """Choose stretch endpoints from the pre/post-correction luma planes.

    The lower end comes from how far the dark-pixel population moved: the
    difference between the bins where each plane's own dark set reaches 30%
    of its cumulative mass. Without any dark pixels after correction the 2nd
    percentile is used instead. The upper end is the 98th percentile. Both
    ends clip at most ``clip_limit`` bins. Chroma planes gate the dark set
    via the chroma radius when given; otherwise darkness is luma-only.
    """
    if y_before.shape != y_after.shape:
        raise DimensionMismatchError(f"luma planes {y_before.shape} vs {y_after.shape}")
    if cb is not None and cr is not None:
        dark_before = dark_mask(y_before, cb, cr, rule, chroma_mode)
        dark_after = dark_mask(y_after, cb, cr, rule, chroma_mode)
    else:
        dark_before = y_before < rule.y_threshold
        dark_after = y_after < rule.y_threshold

    hist_after = Histogram256.from_plane(y_after)
    if int(dark_after.sum()) >= 1:
        bin_before = _bin_at_count(y_before, dark_before, 0.30)
        bin_after = _bin_at_count(y_after, dark_after, 0.30)
        lo = max(0, bin_after - bin_before)
    else:
        lo = hist_after.percentile_bin(2.0)
    hi = hist_after.percentile_bin(98.0)

    lo = min(lo, clip_limit)
    hi = max(hi, N_BINS - 1 - clip_limit)
    hi = max(hi, lo + 1)
    return StretchRange(lo=lo, hi=hi, clip_limit=clip_limit)


def apply_stretch(plane: np.ndarray, rng: StretchRange) -> np.ndarray:
    data = _as_float(plane)
    lo = np.asarray(rng.lo / (N_BINS - 1), dtype=data.dtype)
    hi = np.asarray(rng.hi / (N_BINS - 1), dtype=data.dtype)
    return np.clip((data - lo) / (hi - lo), 0.0, 1.0)


def saturation_enhance(rgb: np.ndarray, y_in: np.ndarray, y_out: np.ndarray,
                       variant: str = "printed") -> np.ndarray:
    """Scale chroma alongside the luma boost.

    Per channel C: printed form 0.5 * (y_out / y_in) * (C + y_in) + C - y_in.
    The "half_difference" variant halves the (C - y_in) residual as well,
    which makes an unchanged luma an exact identity; the printed form does
    not, and is kept as the default on purpose.
    """
    if rgb.shape[:2] != y_in.shape or y_in.shape != y_out.shape:
        raise DimensionMismatchError(
            f"rgb {rgb.shape} vs luma {y_in.shape} vs {y_out.shape}"
        )
    data = _as_float(rgb)
    y = np.maximum(y_in, 1e-6).astype(data.dtype)[..., None]
    ratio = y_out.astype(data.dtype)[..., None] / y
    if variant == "printed":
        out = 0.5 * ratio * (data + y) + data - y
    elif variant == "half_difference":
        out = 0.5 * ratio * (data + y) + 0.5 * (data - y)
    else:
        raise ValueError(f"unknown saturation variant {variant!r}")
    return np.clip(out, 0.0, 1.0)


def black_point_correct(rgb: np.ndarray, percentile: float = 20.0,
                        mode: str = "subtract") -> np.ndarray:
    """Anchor the tonal floor at the dark end of the value channel.

    The threshold is the nearest-rank percentile of V = max(R, G, B) on the
    256-bin histogram. "subtract" shifts all channels down by the threshold
    (levels-style, keeps gradients smooth); "hard_zero" zeroes only the
    pixels whose V falls below it.
    """
    data = _as_float(rgb)
    value = data.max(axis=-1)
    hist = Histogram256.from_plane(value)
    t = np.asarray(hist.percentile_bin(percentile) / (N_BINS - 1), dtype=data.dtype)
    if mode == "subtract":
        return np.clip(data - t, 0.0, 1.0)
    if mode == "hard_zero":
        out = data.copy()
        out[value < t] = 0.0
        return out
    raise ValueError(f"unknown black point mode {mode!r}")


def unsharp_mask(img: np.ndarray, sigma: float = 1.5, amount: float = 0.5) -> np.ndarray:
    """Sharpen by adding back the high-pass residual of a Gaussian blur."""
    if sigma <= 0:
        raise ValueError(f"unsharp sigma must be > 0, got {sigma}")
    if amount < 0:
        raise ValueError(f"unsharp amount must be >= 0, got {amount}")
    data = _as_float(img)
    sigmas = (sigma, sigma) if data.ndim == 2 else (sigma, sigma, 0.0)
    blurred = ndimage.gaussian_filter(data, sigma=sigmas, mode="reflect")
    return np.clip(data + np.asarray(amount, dtype=data.dtype) * (data - blurred), 0.0, 1.0)
