"""RAW frame decoding, JPEG encoding, resize and orientation handling.

Input frames are 16-bit single-channel PNGs with a sibling JSON metadata
file. The metadata schema is this package's contract:

    black_level     number
    white_level     number
    cfa_pattern     [c00, c01, c10, c11] with codes 0=R, 1=G, 2=B
    color_matrix_1  9 floats, row-major 3x3, XYZ -> camera RGB
    noise_profile   non-empty array of non-negative floats
    orientation     0 | 90 | -90 | 180 (degrees, clockwise positive)

A converter hook on load_raw adapts other metadata layouts to this one.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .errors import BadDimsError, MalformedMetadataError, MalformedPngError


class Orientation(enum.Enum):
    LANDSCAPE_0 = 0
    PORTRAIT_90_CW = 90
    PORTRAIT_90_CCW = -90
    ROTATE_180 = 180

    @property
    def swaps_axes(self) -> bool:
        return self in (Orientation.PORTRAIT_90_CW, Orientation.PORTRAIT_90_CCW)


@dataclass
class FrameMetadata:
    black_level: float
    white_level: float
    cfa_pattern: tuple
    color_matrix_1: np.ndarray
    noise_profile: tuple
    orientation: Orientation = Orientation.LANDSCAPE_0

    def validate(self) -> "FrameMetadata":
        if not self.black_level < self.white_level:
            raise MalformedMetadataError(
                f"black_level {self.black_level} must be below white_level {self.white_level}"
            )
        pattern = tuple(int(c) for c in self.cfa_pattern)
        if len(pattern) != 4 or sorted(pattern) != [0, 1, 1, 2]:
            raise MalformedMetadataError(f"cfa_pattern {pattern} must hold one R, two G, one B")
        cm = np.asarray(self.color_matrix_1, dtype=np.float64)
        if cm.size != 9:
            raise MalformedMetadataError("color_matrix_1 must hold 9 values")
        if abs(np.linalg.det(cm.reshape(3, 3))) <= 1e-12:
            raise MalformedMetadataError("color_matrix_1 is singular")
        profile = tuple(float(v) for v in self.noise_profile)
        if not profile:
            raise MalformedMetadataError("noise_profile is empty")
        if any(v < 0 for v in profile):
            raise MalformedMetadataError("noise_profile entries must be >= 0")
        return self

    @classmethod
    def from_json_dict(cls, data: dict) -> "FrameMetadata":
        required = ("black_level", "white_level", "cfa_pattern", "color_matrix_1", "noise_profile", "orientation")
        missing = [k for k in required if k not in data]
        if missing:
            raise MalformedMetadataError(f"metadata missing fields: {missing}")
        try:
            orientation = Orientation(int(data["orientation"]))
        except ValueError:
            raise MalformedMetadataError(
                f"orientation {data['orientation']!r} not one of 0, 90, -90, 180"
            ) from None
        meta = cls(
            black_level=float(data["black_level"]),
            white_level=float(data["white_level"]),
            cfa_pattern=tuple(int(c) for c in data["cfa_pattern"]),
            color_matrix_1=np.asarray(data["color_matrix_1"], dtype=np.float64).reshape(3, 3),
            noise_profile=tuple(float(v) for v in data["noise_profile"]),
            orientation=orientation,
        )
        return meta.validate()


@dataclass
class RawFrame:
    """Single-channel 16-bit mosaiced sensor image plus its metadata."""

    pixels: np.ndarray
    meta: FrameMetadata


@dataclass
class OutputSpec:
    """Challenge output geometry: sizes are (width, height)."""

    landscape_size: tuple = (1300, 866)
    portrait_size: tuple = (866, 1300)
    jpeg_quality: int = 100

    def validate(self) -> "OutputSpec":
        if not 1 <= self.jpeg_quality <= 100:
            raise ValueError(f"jpeg_quality {self.jpeg_quality} outside [1, 100]")
        return self


def load_raw(png_path, json_path, metadata_converter=None) -> RawFrame:
    """Decode a 16-bit PNG and its sibling metadata JSON into a RawFrame.

    ``metadata_converter``, when given, receives the parsed JSON dict and
    returns a dict in this package's schema (hook for other vendors' layouts).
    """
    png_path, json_path = Path(png_path), Path(json_path)
    if not png_path.is_file():
        raise FileNotFoundError(f"RAW PNG not found: {png_path}")
    if not json_path.is_file():
        raise FileNotFoundError(f"metadata JSON not found: {json_path}")

    pixels = cv2.imread(str(png_path), cv2.IMREAD_UNCHANGED)
    if pixels is None:
        raise MalformedPngError(f"could not decode PNG: {png_path}")
    if pixels.ndim != 2:
        raise MalformedPngError(f"expected single-channel PNG, got {pixels.ndim} dims: {png_path}")
    if pixels.dtype != np.uint16:
        raise MalformedPngError(f"expected 16-bit PNG, got {pixels.dtype}: {png_path}")
    rows, cols = pixels.shape
    if rows < 2 or cols < 2 or rows % 2 or cols % 2:
        raise MalformedPngError(f"mosaic dims must be even and >= 2x2, got {rows}x{cols}")

    try:
        with open(json_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedMetadataError(f"invalid JSON in {json_path}: {exc}") from exc
    if metadata_converter is not None:
        data = metadata_converter(data)
    meta = FrameMetadata.from_json_dict(data)

    if int(pixels.max()) > meta.white_level:
        raise MalformedPngError(
            f"pixel values exceed white_level {meta.white_level}: max={int(pixels.max())}"
        )
    return RawFrame(pixels=np.ascontiguousarray(pixels), meta=meta)


_CV_INTERP = {"bicubic": cv2.INTER_CUBIC, "bilinear": cv2.INTER_LINEAR}


def resize_to_output(img: np.ndarray, meta: FrameMetadata, spec: OutputSpec,
                     interpolation: str = "bicubic") -> np.ndarray:
    """Resize to the challenge output size chosen by the post-orientation aspect.

    Orientation is applied later in the pipeline, so when the pending rotation
    swaps axes this returns the transposed target so the final rotated image
    lands exactly on the chosen size. The full source maps onto the target
    (slight anamorphic stretch accepted, no cropping).
    """
    h, w = img.shape[:2]
    if h < 2 or w < 2:
        raise BadDimsError(f"image too small to resize: {h}x{w}")
    post_w, post_h = (h, w) if meta.orientation.swaps_axes else (w, h)
    target_w, target_h = spec.landscape_size if post_w >= post_h else spec.portrait_size
    if meta.orientation.swaps_axes:
        target_w, target_h = target_h, target_w
    if (w, h) == (target_w, target_h):
        return np.clip(img, 0.0, 1.0)
    out = cv2.resize(img, (target_w, target_h), interpolation=_CV_INTERP[interpolation])
    return np.clip(out, 0.0, 1.0)


def apply_orientation(img: np.ndarray, orientation: Orientation) -> np.ndarray:
    """Lossless 90-degree-multiple rotation matching the metadata orientation."""
    if orientation is Orientation.LANDSCAPE_0:
        return img
    if orientation is Orientation.PORTRAIT_90_CW:
        return np.ascontiguousarray(np.rot90(img, k=-1))
    if orientation is Orientation.PORTRAIT_90_CCW:
        return np.ascontiguousarray(np.rot90(img, k=1))
    return np.ascontiguousarray(np.rot90(img, k=2))


def inverse_orientation(orientation: Orientation) -> Orientation:
    if orientation is Orientation.PORTRAIT_90_CW:
        return Orientation.PORTRAIT_90_CCW
    if orientation is Orientation.PORTRAIT_90_CCW:
        return Orientation.PORTRAIT_90_CW
    return orientation


def save_jpeg(img: np.ndarray, path, quality: int = 100) -> None:
    """Write a [0, 1] RGB image as a baseline JPEG."""
    img8 = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    bgr = np.ascontiguousarray(img8[..., ::-1])
    flags = [cv2.IMWRITE_JPEG_QUALITY, int(quality)]
    if hasattr(cv2, "IMWRITE_JPEG_SAMPLING_FACTOR"):
        # no chroma subsampling at the quality-100 output point
        flags += [cv2.IMWRITE_JPEG_SAMPLING_FACTOR, cv2.IMWRITE_JPEG_SAMPLING_FACTOR_444]
    ok = False
    try:
        ok = cv2.imwrite(str(path), bgr, flags)
    except cv2.error as exc:
        raise OSError(f"could not write JPEG {path}: {exc}") from exc
    if not ok:
        raise OSError(f"could not write JPEG: {path}")
