"""Noise classification, BM3D and non-local means denoisers, and the
luminance-masked blend that restores fine detail after denoising.

BM3D runs the classic two passes (collaborative hard thresholding, then
Wiener filtering with the first pass as pilot) over groups of matched 8x8
blocks. Grouping, transforms and aggregation are all vectorized: block
distances come from per-offset integral images evaluated at the reference
grid, and block-wise estimates are scattered back with np.bincount.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .colorspace import _as_float, luma
from .errors import (
    DimensionMismatchError,
    EmptyProfileError,
    ImageTooSmallError,
)
from .local_contrast import build_mask, default_mask_sigma

_REF_CHUNK = 4096


@dataclass(frozen=True)
class NoiseClass:
    class_id: str
    sigma: float


def classify_noise(profile, thresholds=(0.02, 0.06), sigmas=(0.2, 0.6, 0.8)) -> NoiseClass:
    """Map the frame's noise profile onto one of three denoiser strengths.

    The scalar statistic is the mean of the profile entries; the boundary
    between classes goes up (a mean exactly at a threshold takes the
    stronger class).
    """
    values = [float(v) for v in profile]
    if not values:
        raise EmptyProfileError("noise_profile is empty")
    t1, t2 = thresholds
    if not t1 < t2:
        raise ValueError(f"noise thresholds must increase, got {thresholds}")
    s = sum(values) / len(values)
    if s < t1:
        return NoiseClass("low", sigmas[0])
    if s < t2:
        return NoiseClass("mid", sigmas[1])
    return NoiseClass("high", sigmas[2])


@dataclass(frozen=True)
class BlendParams:
    u: float = 0.6
    mask_sigma: float = None

    def __post_init__(self):
        if not 0.0 <= self.u <= 1.0:
            raise ValueError(f"blend u must lie in [0, 1], got {self.u}")


@dataclass(frozen=True)
class Bm3dParams:
    block_size: int = 8
    search_window: int = 39
    max_matches: int = 16
    lambda_3d: float = 2.7
    step: int = 3
    # match thresholds from the standard profile, rescaled to [0,1] images
    tau_match_hard: float = 3000.0 / 255.0**2
    tau_match_wiener: float = 400.0 / 255.0**2
    kaiser_beta: float = 2.0

    def __post_init__(self):
        if self.block_size > self.search_window:
            raise ValueError("block size exceeds search window")
        k = self.max_matches
        if k < 1 or (k & (k - 1)) != 0:
            raise ValueError(f"max_matches must be a power of two, got {k}")


def _dct_matrix(n: int, dtype) -> np.ndarray:
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    m = np.cos(np.pi * (2 * x + 1) * k / (2.0 * n)) * np.sqrt(2.0 / n)
    m[0] /= np.sqrt(2.0)
    return m.astype(dtype)


def _haar_matrix(n: int, dtype) -> np.ndarray:
    m = np.array([[1.0]])
    while m.shape[0] < n:
        top = np.kron(m, [1.0, 1.0])
        bottom = np.kron(np.eye(m.shape[0]), [1.0, -1.0])
        m = np.vstack([top, bottom]) / np.sqrt(2.0)
    return m.astype(dtype)


def _ref_coords(last: int, step: int) -> np.ndarray:
    coords = np.arange(0, last + 1, step, dtype=np.int32)
    if coords[-1] != last:
        coords = np.append(coords, np.int32(last))
    return coords


def _offset_distances(img, dr, dc, ref_r, ref_c, block):
    """Mean squared block difference at every reference position for one
    search offset, via a two-pass cumulative sum over the difference image."""
    h, w = img.shape
    e = np.zeros((h, w), dtype=img.dtype)
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    d = img[r0:r1, c0:c1] - img[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
    e[r0:r1, c0:c1] = d * d

    cs = np.cumsum(e, axis=0)
    top = cs[ref_r + block - 1]
    bottom = np.zeros_like(top)
    interior = ref_r > 0
    bottom[interior] = cs[ref_r[interior] - 1]
    rows = np.cumsum(top - bottom, axis=1)
    right = rows[:, ref_c + block - 1]
    left = np.zeros_like(right)
    interior_c = ref_c > 0
    left[:, interior_c] = rows[:, ref_c[interior_c] - 1]
    dist = (right - left) / (block * block)

    bad_r = (ref_r + dr < 0) | (ref_r + dr > h - block)
    bad_c = (ref_c + dc < 0) | (ref_c + dc > w - block)
    dist[bad_r, :] = np.inf
    dist[:, bad_c] = np.inf
    return dist.ravel()


def _match_blocks(img, params: Bm3dParams, tau: float):
    """Find, per reference block, the best-matching block positions.

    Returns (rows, cols) of matches as (max_matches, n_ref) arrays in a
    canonical (distance, offset) order, plus the power-of-two group size per
    reference. Self always matches at distance zero, so sizes are >= 1.
    """
    h, w = img.shape
    b, k = params.block_size, params.max_matches
    radius = (params.search_window - b) // 2
    ref_r = _ref_coords(h - b, params.step)
    ref_c = _ref_coords(w - b, params.step)
    n_ref = ref_r.size * ref_c.size

    # the self offset gets id 0 so distance ties can never evict the
    # reference block from its own group (aggregation must cover every ref)
    grid = [(dr, dc)
            for dr in range(-radius, radius + 1)
            for dc in range(-radius, radius + 1)
            if (dr, dc) != (0, 0)]
    offsets = [(0, 0)] + grid
    dr_table = np.array([o[0] for o in offsets], dtype=np.int32)
    dc_table = np.array([o[1] for o in offsets], dtype=np.int32)

    best_d = np.full((k, n_ref), np.inf, dtype=img.dtype)
    best_id = np.zeros((k, n_ref), dtype=np.int32)
    pend_d, pend_i = [], []

    def merge():
        nonlocal best_d, best_id
        stack_d = np.vstack([best_d] + pend_d)
        stack_i = np.vstack([best_id] + pend_i)
        sel = np.argpartition(stack_d, kth=k - 1, axis=0)[:k]
        best_d = np.take_along_axis(stack_d, sel, axis=0)
        best_id = np.take_along_axis(stack_i, sel, axis=0)
        pend_d.clear()
        pend_i.clear()

    for offset_id, (dr, dc) in enumerate(offsets):
        dist = _offset_distances(img, dr, dc, ref_r, ref_c, b)
        pend_d.append(dist[None])
        pend_i.append(np.full((1, n_ref), offset_id, dtype=np.int32))
        if len(pend_d) >= 32:
            merge()
    if pend_d:
        merge()

    # canonical ordering makes grouping independent of partition internals
    order = np.lexsort((best_id, best_d), axis=0)
    best_d = np.take_along_axis(best_d, order, axis=0)
    best_id = np.take_along_axis(best_id, order, axis=0)

    count = np.maximum((best_d <= tau).sum(axis=0), 1)
    gsize = (1 << np.floor(np.log2(count)).astype(np.int64)).astype(np.int32)
    rows = np.repeat(ref_r, ref_c.size)[None, :] + dr_table[best_id]
    cols = np.tile(ref_c, ref_r.size)[None, :] + dc_table[best_id]
    return rows, cols, gsize


def _collaborative_pass(noisy, basic, params: Bm3dParams, sigma: float):
    """One BM3D pass. With basic=None: match on the noisy image and hard
    threshold. With a basic estimate: match on it and Wiener-filter the noisy
    groups using the basic groups as pilot spectrum."""
    pilot = noisy if basic is None else basic
    tau = params.tau_match_hard if basic is None else params.tau_match_wiener
    rows, cols, gsize = _match_blocks(pilot, params, tau)

    b = params.block_size
    dt = noisy.dtype
    dct = _dct_matrix(b, dt)
    spatial = np.kron(dct, dct)  # acts on row-major flattened blocks
    window = np.outer(np.kaiser(b, params.kaiser_beta), np.kaiser(b, params.kaiser_beta))
    h, w = noisy.shape
    offs = np.arange(b, dtype=np.int64)
    num = np.zeros(h * w, dtype=np.float64)
    den = np.zeros(h * w, dtype=np.float64)
    sig2 = float(sigma) ** 2

    group_sizes = []
    g = 1
    while g <= params.max_matches:
        group_sizes.append(g)
        g *= 2
    for g in group_sizes:
        refs = np.flatnonzero(gsize == g)
        if refs.size == 0:
            continue
        haar = _haar_matrix(g, dt)
        for lo in range(0, refs.size, _REF_CHUNK):
            chunk = refs[lo:lo + _REF_CHUNK]
            m = chunk.size
            r_idx = rows[:g, chunk].T.astype(np.int64)  # (m, g)
            c_idx = cols[:g, chunk].T.astype(np.int64)
            rr = r_idx[:, :, None, None] + offs[None, None, :, None]
            cc = c_idx[:, :, None, None] + offs[None, None, None, :]

            spec_n = noisy[rr, cc].reshape(m * g, b * b) @ spatial.T
            spec_n = np.matmul(haar, spec_n.reshape(m, g, b * b))
            if basic is None:
                keep = np.abs(spec_n) >= params.lambda_3d * sigma
                keep[:, 0, 0] = True  # the group mean survives any sigma
                spec_n = np.where(keep, spec_n, 0)
                weight = 1.0 / (sig2 * keep.sum(axis=(1, 2)))
            else:
                spec_b = basic[rr, cc].reshape(m * g, b * b) @ spatial.T
                spec_b = np.matmul(haar, spec_b.reshape(m, g, b * b))
                shrink = spec_b * spec_b
                shrink = shrink / (shrink + sig2)
                shrink[:, 0, 0] = 1.0
                spec_n = shrink * spec_n
                weight = 1.0 / (sig2 * (shrink * shrink).sum(axis=(1, 2)))

            back = np.matmul(haar.T, spec_n).reshape(m * g, b * b) @ spatial
            est = back.reshape(m, g, b, b)
            contrib = weight[:, None, None, None] * window[None, None] * est
            flat = (rr * w + cc).ravel()
            num += np.bincount(flat, weights=contrib.ravel(), minlength=h * w)
            wmap = np.broadcast_to(weight[:, None, None, None] * window, est.shape)
            den += np.bincount(flat, weights=wmap.ravel(), minlength=h * w)

    return (num / den).reshape(h, w).astype(dt)


def _bm3d_plane(plane: np.ndarray, sigma: float, params: Bm3dParams) -> np.ndarray:
    h, w = plane.shape
    if h < params.block_size or w < params.block_size:
        raise ImageTooSmallError(
            f"image {h}x{w} smaller than BM3D block size {params.block_size}"
        )
    basic = np.clip(_collaborative_pass(plane, None, params, sigma), 0.0, 1.0)
    final = _collaborative_pass(plane, basic, params, sigma)
    return np.clip(final, 0.0, 1.0)


def bm3d(img: np.ndarray, sigma: float, params: Bm3dParams = None) -> np.ndarray:
    """Two-stage BM3D estimate; channels of an RGB image run independently."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    params = params if params is not None else Bm3dParams()
    data = _as_float(img)
    if data.ndim == 2:
        return _bm3d_plane(data, sigma, params)
    if data.ndim == 3:
        return np.stack(
            [_bm3d_plane(data[..., c], sigma, params) for c in range(data.shape[-1])],
            axis=-1,
        )
    raise DimensionMismatchError(f"expected 2-D or 3-D image, got {data.ndim} dims")


def _nlm_plane(plane, sigma, patch_size, search_size, h_factor):
    h, w = plane.shape
    pr = patch_size // 2
    sr = search_size // 2
    if h < patch_size or w < patch_size:
        raise ImageTooSmallError(f"image {h}x{w} smaller than NLM patch {patch_size}")
    pad = sr + pr
    padded = np.pad(plane, pad, mode="reflect")
    center = padded[sr:sr + h + 2 * pr, sr:sr + w + 2 * pr]
    strength = (h_factor * sigma) ** 2
    acc = np.zeros((h, w), dtype=plane.dtype)
    wsum = np.zeros((h, w), dtype=plane.dtype)
    for dr in range(-sr, sr + 1):
        for dc in range(-sr, sr + 1):
            shifted = padded[sr + dr:sr + dr + h + 2 * pr, sr + dc:sr + dc + w + 2 * pr]
            diff = center - shifted
            dist = ndimage.uniform_filter(diff * diff, patch_size)[pr:-pr, pr:-pr]
            weight = np.exp(-dist / strength)
            acc += weight * shifted[pr:-pr, pr:-pr]
            wsum += weight
    return np.clip(acc / wsum, 0.0, 1.0)


def nlm(img: np.ndarray, sigma: float, patch_size: int = 7, search_size: int = 21,
        h_factor: float = 0.8) -> np.ndarray:
    """Non-local means with patch-mean squared distances and Gaussian weights."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    data = _as_float(img)
    if data.ndim == 2:
        return _nlm_plane(data, sigma, patch_size, search_size, h_factor)
    if data.ndim == 3:
        return np.stack(
            [_nlm_plane(data[..., c], sigma, patch_size, search_size, h_factor)
             for c in range(data.shape[-1])],
            axis=-1,
        )
    raise DimensionMismatchError(f"expected 2-D or 3-D image, got {data.ndim} dims")


def blend_masked(denoised: np.ndarray, noisy: np.ndarray,
                 params: BlendParams = BlendParams()) -> np.ndarray:
    """Luminance-masked mix: bright (detail-bearing) regions keep more of the
    noisy image, dark ones more of the denoised estimate.

    The mask is the Gaussian-blurred luma of the noisy input, so the blend is
    driven by where detail could survive, not by the denoiser's output.
    """
    if denoised.shape != noisy.shape:
        raise DimensionMismatchError(f"shape mismatch: {denoised.shape} vs {noisy.shape}")
    sigma = params.mask_sigma
    if sigma is None:
        sigma = default_mask_sigma(noisy.shape)
    mask = build_mask(luma(noisy), sigma)[..., None]
    d = _as_float(denoised)
    n = _as_float(noisy)
    u = np.asarray(params.u, dtype=d.dtype)
    out = d * (1.0 - mask * u) + n * (mask * u)
    return np.clip(out, 0.0, 1.0)
