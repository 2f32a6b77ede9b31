"""Normalization and color-space math.

All functions work on floating point arrays with values nominally in [0, 1]
and preserve the floating dtype of their input (integer input is promoted to
float32). RGB <-> YCbCr uses the BT.601 full-range convention with chroma
centered at 0.5, which is what the chroma-radius rule downstream assumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidGammaError, SingularMatrixError

# Color space tags carried by ImagePlanar.
CAMERA_RGB = "camera_rgb"
XYZ = "xyz"
LINEAR_SRGB = "linear_srgb"
ENCODED_SRGB = "encoded_srgb"
YCBCR = "ycbcr"
HSV = "hsv"
MOSAIC = "mosaic"
LUMA = "luma"

# Linear XYZ (D65) -> sRGB, IEC 61966-2-1.
XYZ_TO_SRGB = np.array(
    [
        [3.2404542, -1.5371385, -0.4985314],
        [-0.9692660, 1.8760108, 0.0415560],
        [0.0556434, -0.2040259, 1.0572252],
    ]
)

# plain floats: np.float64 scalars would upcast float32 planes (NEP 50)
_BT601 = (0.299, 0.587, 0.114)


@dataclass
class ImagePlanar:
    """An image plus the tag of the color space its values live in.

    ``data`` is H x W x 3 for three-channel spaces and H x W for the
    single-channel tags (mosaic, luma).
    """

    data: np.ndarray
    space: str


def _as_float(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype.kind == "f":
        return img
    return img.astype(np.float32)


def normalize_raw(frame, dtype=np.float32) -> np.ndarray:
    """Map raw sensor counts to [0, 1]: subtract the black level, rescale so
    the white level lands on 1, clamp."""
    meta = frame.meta
    scale = float(meta.white_level - meta.black_level)
    out = (frame.pixels.astype(dtype) - dtype(meta.black_level)) / dtype(scale)
    return np.clip(out, 0.0, 1.0)


def camera_to_srgb_matrix(color_matrix_1: np.ndarray) -> np.ndarray:
    """Composite camera RGB -> linear sRGB matrix, row-normalized so camera
    white (1,1,1) maps exactly to sRGB white."""
    cm = np.asarray(color_matrix_1, dtype=np.float64).reshape(3, 3)
    if abs(np.linalg.det(cm)) <= 1e-12:
        raise SingularMatrixError("color_matrix_1 is singular (|det| <= 1e-12)")
    composite = XYZ_TO_SRGB @ np.linalg.inv(cm)
    row_sums = composite.sum(axis=1, keepdims=True)
    if np.any(np.abs(row_sums) <= 1e-12):
        raise SingularMatrixError("composite color matrix has a zero row sum")
    return composite / row_sums


def camera_to_srgb(img: np.ndarray, meta) -> np.ndarray:
    """Camera RGB -> XYZ (inverse of color_matrix_1) -> linear sRGB, clamped."""
    matrix = camera_to_srgb_matrix(meta.color_matrix_1)
    img = _as_float(img)
    out = img @ matrix.T.astype(img.dtype)
    return np.clip(out, 0.0, 1.0)


def rgb_to_ycbcr(img: np.ndarray) -> np.ndarray:
    """BT.601 full-range RGB -> YCbCr; Cb/Cr are 0.5 at neutral chroma."""
    img = _as_float(img)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 0.5 + (b - y) * (0.5 / (1.0 - 0.114))
    cr = 0.5 + (r - y) * (0.5 / (1.0 - 0.299))
    return np.stack([y, cb, cr], axis=-1)


def ycbcr_to_rgb(img: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_ycbcr` (no clamping: callers decide)."""
    img = _as_float(img)
    y, cb, cr = img[..., 0], img[..., 1] - 0.5, img[..., 2] - 0.5
    r = y + cr * ((1.0 - 0.299) / 0.5)
    b = y + cb * ((1.0 - 0.114) / 0.5)
    g = (y - _BT601[0] * r - _BT601[2] * b) / _BT601[1]
    return np.stack([r, g, b], axis=-1)


def luma(img: np.ndarray) -> np.ndarray:
    """BT.601 luma of an RGB image (the Y plane of rgb_to_ycbcr)."""
    img = _as_float(img)
    return 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]


def rgb_to_hsv_value(img: np.ndarray) -> np.ndarray:
    """The V channel of HSV: per-pixel max over R, G, B."""
    return _as_float(img).max(axis=-1)


def gamma_encode(img: np.ndarray, gamma_exponent: float) -> np.ndarray:
    """Elementwise power curve ``out = in ** gamma_exponent``."""
    if not gamma_exponent > 0:
        raise InvalidGammaError(f"gamma exponent must be > 0, got {gamma_exponent}")
    img = _as_float(img)
    return np.power(img, img.dtype.type(gamma_exponent))


def quantize_8bit(img: np.ndarray) -> np.ndarray:
    """Quantize to the 256 8-bit levels while staying a [0, 1] float image.

    This is the single point in the pipeline where precision is dropped;
    everything after it still operates on floats.
    """
    img = _as_float(img)
    return np.round(img * 255.0) / img.dtype.type(255.0)


def to_uint8(img: np.ndarray) -> np.ndarray:
    """[0, 1] float -> uint8 with round-half-up-to-even semantics of np.round."""
    img = np.clip(_as_float(img), 0.0, 1.0)
    return np.round(img * 255.0).astype(np.uint8)
