"""Pipeline configuration: every empirical constant, in one flat namespace.

Config files are plain text, one ``key = value`` pair per line, with ``#``
comments. Values parse by the type of the field's default: booleans as
true/false, pairs and triples as comma-separated numbers, and the optional
blur sigmas accept ``none`` to mean "derive from image size".
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .frame_io import OutputSpec
from .tone import DarkPixelRule

# fields whose value may be "none" (derived from image dims at run time)
_OPTIONAL_FLOATS = {"lcc_mask_sigma", "blend_mask_sigma"}

_CHOICES = {
    "denoiser": ("bm3d", "nlm", "none"),
    "denoise_channels": ("rgb", "luma"),
    "chroma_mode": ("magnitude", "literal"),
    "saturation_variant": ("printed", "half_difference"),
    "black_point_mode": ("subtract", "hard_zero"),
    "gi_score": ("hypot", "sum"),
    "resize_interpolation": ("bicubic", "bilinear"),
}


@dataclass
class PipelineConfig:
    # blur masks (none -> min(H, W) / 30 at run time)
    lcc_mask_sigma: float = None
    blend_mask_sigma: float = None
    # sharpening
    unsharp_sigma: float = 1.5
    unsharp_amount: float = 0.5
    # dark-pixel rule and chroma radius mode
    dark_y_threshold: float = 0.14
    dark_cr_threshold: float = 0.07
    chroma_mode: str = "magnitude"
    # histogram stretch
    stretch_clip_limit: int = 50
    # black point
    black_point_percentile: float = 20.0
    black_point_mode: str = "subtract"
    # global gamma exponent
    global_gamma: float = 1.0 / 1.4
    # saturation formula
    saturation_variant: str = "printed"
    # detail-preserving blend
    blend_u: float = 0.6
    # noise classification and denoiser
    noise_thresholds: tuple = (0.02, 0.06)
    noise_sigmas: tuple = (0.2, 0.6, 0.8)
    denoiser: str = "bm3d"
    denoise_channels: str = "rgb"
    nlm_patch_size: int = 7
    nlm_search_size: int = 21
    nlm_h_factor: float = 0.8
    # grayness index estimator
    gi_blur_sigma: float = 0.5
    gi_select_fraction: float = 0.001
    gi_score: str = "hypot"
    # output geometry and encoding
    landscape_size: tuple = (1300, 866)
    portrait_size: tuple = (866, 1300)
    jpeg_quality: int = 100
    resize_interpolation: str = "bicubic"
    # low-light stage switches
    enable_lcc: bool = True
    enable_stretch: bool = True
    enable_saturation: bool = True
    enable_black_point: bool = True
    enable_global_gamma: bool = True
    enable_unsharp: bool = True
    enable_quantize: bool = True
    enable_resize: bool = True
    enable_denoise: bool = True
    enable_blend: bool = True
    enable_gi_awb: bool = True
    enable_orientation: bool = True

    def validate(self) -> "PipelineConfig":
        for name, allowed in _CHOICES.items():
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        for name in ("unsharp_sigma", "global_gamma", "gi_blur_sigma", "nlm_h_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("lcc_mask_sigma", "blend_mask_sigma"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be > 0 or none, got {value}")
        if self.unsharp_amount < 0:
            raise ValueError(f"unsharp_amount must be >= 0, got {self.unsharp_amount}")
        if not 0.0 < self.dark_y_threshold < 1.0 or not 0.0 < self.dark_cr_threshold < 1.0:
            raise ValueError("dark-pixel thresholds must lie in (0, 1)")
        if not 0 < self.stretch_clip_limit <= 127:
            raise ValueError(f"stretch_clip_limit outside (0, 127]: {self.stretch_clip_limit}")
        if not 0.0 <= self.black_point_percentile <= 100.0:
            raise ValueError(f"black_point_percentile outside [0, 100]: {self.black_point_percentile}")
        if not 0.0 <= self.blend_u <= 1.0:
            raise ValueError(f"blend_u outside [0, 1]: {self.blend_u}")
        t1, t2 = self.noise_thresholds
        if not t1 < t2:
            raise ValueError(f"noise_thresholds must increase: {self.noise_thresholds}")
        if len(self.noise_sigmas) != 3 or any(s <= 0 for s in self.noise_sigmas):
            raise ValueError(f"noise_sigmas needs 3 positive values: {self.noise_sigmas}")
        if not 0.0 < self.gi_select_fraction <= 1.0:
            raise ValueError(f"gi_select_fraction outside (0, 1]: {self.gi_select_fraction}")
        if self.nlm_patch_size % 2 == 0 or self.nlm_search_size % 2 == 0:
            raise ValueError("nlm patch and search sizes must be odd")
        self.output_spec().validate()
        self.dark_rule()
        return self

    def output_spec(self) -> OutputSpec:
        return OutputSpec(
            landscape_size=tuple(self.landscape_size),
            portrait_size=tuple(self.portrait_size),
            jpeg_quality=self.jpeg_quality,
        )

    def dark_rule(self) -> DarkPixelRule:
        return DarkPixelRule(self.dark_y_threshold, self.dark_cr_threshold)

    @classmethod
    def defaults(cls) -> "PipelineConfig":
        return cls()

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        text = Path(path).read_text(encoding="utf-8")
        overrides = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            overrides[key.strip()] = value.strip()
        return cls.defaults().updated(overrides).validate()

    def updated(self, overrides: dict) -> "PipelineConfig":
        """New config with string overrides parsed per field type."""
        known = {f.name: f for f in dataclasses.fields(self)}
        parsed = {}
        for key, value in overrides.items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            parsed[key] = _parse_value(key, value, getattr(self, key))
        return dataclasses.replace(self, **parsed)

    def to_file(self, path) -> None:
        lines = ["# pipeline configuration (defaults reproduce the stock rendering)"]
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_value(key: str, text, default):
    if not isinstance(text, str):
        return text  # already typed (programmatic override)
    text = text.strip()
    if key in _OPTIONAL_FLOATS:
        return None if text.lower() in ("none", "") else float(text)
    if isinstance(default, bool):
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"config key {key!r}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if len(parts) != len(default):
            raise ValueError(f"config key {key!r}: expected {len(default)} values, got {len(parts)}")
        kind = int if all(isinstance(v, int) for v in default) else float
        return tuple(kind(p) for p in parts)
    return text


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
