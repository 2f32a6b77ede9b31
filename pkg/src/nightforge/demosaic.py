"""Bilinear Bayer demosaicing.

Each output channel keeps the mosaic value at sites of its own color and
takes the average of the nearest same-color neighbors elsewhere. Borders
replicate the edge row/column. Implemented as mask-normalized convolution:
dividing conv(values * mask) by conv(mask) makes every output a convex
combination of same-color samples, including at the replicated borders;
native sites are then written back verbatim so they stay bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .colorspace import _as_float
from .errors import BadDimsError, MalformedMetadataError

CHANNEL_R, CHANNEL_G, CHANNEL_B = 0, 1, 2

# green samples sit on a checkerboard: nearest neighbors are the 4-connected
# sites; red/blue form a rectangular lattice reached via row, column and
# diagonal steps, hence the wider stencil
_KERNEL_G = np.array([[0.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 0.0]])
_KERNEL_RB = np.array([[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]])


@dataclass(frozen=True)
class CfaLayout:
    """2x2 color filter cell; codes 0=R, 1=G, 2=B, row-major."""

    cell: tuple

    def __post_init__(self):
        flat = tuple(int(c) for row in self.cell for c in row)
        if sorted(flat) != [0, 1, 1, 2]:
            raise MalformedMetadataError(f"CFA cell {flat} must hold one R, two G, one B")

    @classmethod
    def from_pattern(cls, pattern) -> "CfaLayout":
        flat = tuple(int(c) for c in pattern)
        if len(flat) != 4:
            raise MalformedMetadataError(f"cfa_pattern needs 4 entries, got {len(flat)}")
        return cls(cell=((flat[0], flat[1]), (flat[2], flat[3])))

    def channel_mask(self, channel: int, shape) -> np.ndarray:
        rows, cols = shape
        cell = np.asarray(self.cell)
        tiled = np.tile(cell, ((rows + 1) // 2, (cols + 1) // 2))[:rows, :cols]
        return tiled == channel


def demosaic_bilinear(mosaic: np.ndarray, layout: CfaLayout) -> np.ndarray:
    """Expand a single-channel Bayer mosaic to an (H, W, 3) CameraRGB image."""
    if mosaic.ndim != 2:
        raise BadDimsError(f"mosaic must be 2-D, got {mosaic.ndim} dims")
    rows, cols = mosaic.shape
    if rows < 2 or cols < 2 or rows % 2 or cols % 2:
        raise BadDimsError(f"mosaic dims must be even and >= 2x2, got {rows}x{cols}")

    values = _as_float(mosaic)
    out = np.empty(mosaic.shape + (3,), dtype=values.dtype)
    for channel, kernel in ((CHANNEL_R, _KERNEL_RB), (CHANNEL_G, _KERNEL_G), (CHANNEL_B, _KERNEL_RB)):
        sites = layout.channel_mask(channel, mosaic.shape)
        mask = sites.astype(values.dtype)
        num = ndimage.convolve(values * mask, kernel.astype(values.dtype), mode="nearest")
        den = ndimage.convolve(mask, kernel.astype(values.dtype), mode="nearest")
        plane = num / den
        # border replication re-sums the center at mixed weights, which can
        # round the last bit; native sites must pass through bit-exact
        plane[sites] = values[sites]
        out[..., channel] = plane
    return out
