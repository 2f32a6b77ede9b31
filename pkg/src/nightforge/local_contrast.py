"""Local contrast correction on the luma plane.

A Gaussian-blurred copy of Y steers a spatially varying gamma: with a dark
scene the exponent drops below 1 where the mask is dark (brightening) and
rises above 1 where it is bright, pulling local contrast up without
clipping highlights. Chroma is untouched here; a later saturation stage
compensates for the luma shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .colorspace import _as_float
from .errors import DimensionMismatchError, InvalidGammaError, InvalidMeanError

# pipeline-context clamp for the mean luma entering the gamma formula
_MEAN_CLAMP = 1e-4


@dataclass
class LccResult:
    y_in: np.ndarray
    y_out: np.ndarray
    mask: np.ndarray
    gamma: float

    @property
    def mean_y(self) -> float:
        return float(self.y_in.mean(dtype=np.float64))


def compute_gamma(mean_y: float) -> float:
    """Scene gamma: maps the mean luma onto mid-gray.

    Dark scenes (mean below 0.5) get gamma above 1, bright scenes below 1;
    the two log ratios meet at exactly 1.0 for a mid-gray mean.
    """
    if not 0.0 < mean_y < 1.0:
        raise InvalidMeanError(f"mean luma {mean_y} outside (0, 1)")
    if mean_y >= 0.5:
        return math.log(0.5) / math.log(mean_y)
    return math.log(mean_y) / math.log(0.5)


_FFT_SIGMA_CUTOFF = 16.0


def _fft_gaussian_reflect(data: np.ndarray, sigma: float) -> np.ndarray:
    # large kernels: separable convolution costs O(sigma) per pixel, so
    # reflect-pad by the kernel reach and apply the exact Gaussian transfer
    # function in the frequency domain instead
    pad = min(int(4.0 * sigma + 0.5), data.shape[0] - 1, data.shape[1] - 1)
    padded = np.pad(data, pad, mode="reflect")
    spectrum = np.fft.rfft2(padded)
    spectrum = ndimage.fourier_gaussian(spectrum, sigma, n=padded.shape[1])
    blurred = np.fft.irfft2(spectrum, s=padded.shape)
    return blurred[pad:pad + data.shape[0], pad:pad + data.shape[1]].astype(data.dtype)


def build_mask(y: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian-blurred luma mask with reflective borders."""
    if sigma <= 0:
        raise InvalidGammaError(f"mask sigma must be > 0, got {sigma}")
    data = _as_float(y)
    if sigma > _FFT_SIGMA_CUTOFF:
        return np.clip(_fft_gaussian_reflect(data, sigma), 0.0, 1.0)
    return np.clip(ndimage.gaussian_filter(data, sigma=sigma, mode="reflect"), 0.0, 1.0)


def lcc_apply(y: np.ndarray, mask: np.ndarray, gamma: float) -> np.ndarray:
    """Per-pixel power law: y ** (gamma ** ((mask - 0.5) / 0.5)).

    The outer exponent is always positive, so 0 and 1 stay fixed points.
    """
    if y.shape != mask.shape:
        raise DimensionMismatchError(f"luma {y.shape} vs mask {mask.shape}")
    if gamma <= 0:
        raise InvalidGammaError(f"gamma must be > 0, got {gamma}")
    y_data = _as_float(y)
    exponent = np.power(np.asarray(gamma, dtype=y_data.dtype), (mask.astype(y_data.dtype) - 0.5) / 0.5)
    return np.clip(np.power(y_data, exponent), 0.0, 1.0)


def default_mask_sigma(shape) -> float:
    return min(shape[0], shape[1]) / 30.0


def run_lcc(y: np.ndarray, sigma: float = None) -> LccResult:
    """Full correction pass: mean -> gamma, blur -> mask, apply."""
    if sigma is None:
        sigma = default_mask_sigma(y.shape)
    mean_y = float(np.clip(y.mean(dtype=np.float64), _MEAN_CLAMP, 1.0 - _MEAN_CLAMP))
    gamma = compute_gamma(mean_y)
    mask = build_mask(y, sigma)
    y_out = lcc_apply(y, mask, gamma)
    return LccResult(y_in=y, y_out=y_out, mask=mask, gamma=gamma)
