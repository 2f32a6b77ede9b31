"""Gray World and Grayness Index white balance."""

import numpy as np
import pytest

from nightforge import (
    DegenerateImageError,
    DimensionMismatchError,
    Illuminant,
    ImageTooSmallError,
    apply_gains,
    gray_world_estimate,
    grayness_index_estimate,
)
from nightforge.illuminant import estimate_on_clean_apply_to_blended

from synth import night_scene


class TestIlluminant:
    def test_gains_are_normalized_to_plain_floats(self):
        ill = Illuminant(gains=(np.float32(1.5), 1, 0.5))
        assert all(type(g) is float for g in ill.gains)

    @pytest.mark.parametrize("bad", [(1.0, 2.0), (1.0, 0.0, 1.0), (1.0, -2.0, 1.0),
                                     (1.0, float("nan"), 1.0), (1.0, float("inf"), 1.0)])
    def test_rejects_non_positive_or_non_finite_gains(self, bad):
        with pytest.raises(DegenerateImageError):
            Illuminant(gains=bad)

    def test_as_array_honors_dtype(self):
        arr = Illuminant(gains=(1.2, 1.0, 0.8)).as_array(dtype=np.float32)
        assert arr.dtype == np.float32 and arr.shape == (3,)


class TestGrayWorld:
    def test_neutral_image_gets_unit_gains(self):
        img = np.full((8, 8, 3), 0.42)
        ill = gray_world_estimate(img)
        assert ill.gains == pytest.approx((1.0, 1.0, 1.0), rel=1e-12)

    def test_constant_cast_inverts_exactly(self):
        img = np.zeros((6, 6, 3))
        img[..., 0], img[..., 1], img[..., 2] = 0.4, 0.5, 0.2
        ill = gray_world_estimate(img)
        # gains pull each mean onto the green mean: (0.5/0.4, 1, 0.5/0.2)
        assert ill.gains == pytest.approx((1.25, 1.0, 2.5), rel=1e-12)

    def test_green_gain_is_always_one(self, rng):
        ill = gray_world_estimate(rng.uniform(0.05, 0.9, (16, 16, 3)))
        assert ill.gains[1] == 1.0

    def test_dead_channel_hits_the_mean_floor(self):
        img = np.zeros((8, 8, 3))
        img[..., 1], img[..., 2] = 0.4, 0.2
        ill = gray_world_estimate(img)
        # red mean 0 is floored at 1e-8, so its gain is 0.4 / 1e-8
        assert ill.gains[0] == pytest.approx(4e7, rel=1e-12)
        assert ill.gains[2] == pytest.approx(2.0, rel=1e-12)

    def test_all_black_image_rejected(self):
        with pytest.raises(DegenerateImageError):
            gray_world_estimate(np.zeros((8, 8, 3)))

    @pytest.mark.parametrize("shape", [(8, 8), (8, 8, 4), (0, 8, 3)])
    def test_bad_shapes_rejected(self, shape):
        with pytest.raises(DegenerateImageError):
            gray_world_estimate(np.zeros(shape))

    def test_applying_estimated_gains_equalizes_channel_means(self, rng):
        base = rng.uniform(0.1, 0.5, (32, 32, 3))
        cast = base * np.array([1.3, 1.0, 0.75])
        out = apply_gains(cast, gray_world_estimate(cast))
        means = out.reshape(-1, 3).mean(axis=0)
        assert means == pytest.approx([means[1]] * 3, rel=1e-9)


class TestApplyGains:
    def test_scales_per_channel_and_clips(self):
        img = np.zeros((2, 2, 3))
        img[0, 0] = (0.3, 0.5, 0.8)
        img[1, 1] = (0.7, 0.2, 0.1)
        out = apply_gains(img, Illuminant(gains=(2.0, 1.0, 0.5)))
        assert out[0, 0] == pytest.approx([0.6, 0.5, 0.4], abs=0)
        assert out[1, 1, 0] == 1.0  # 1.4 clipped

    def test_preserves_float32(self):
        img = np.full((4, 4, 3), 0.25, dtype=np.float32)
        assert apply_gains(img, Illuminant(gains=(1.5, 1.0, 1.0))).dtype == np.float32


class TestGraynessIndex:
    def test_uniform_cast_on_achromatic_texture_recovered(self, rng):
        """A global cast over gray texture has flat log-chromaticity, so every
        pixel is a perfect gray candidate and the gains invert the cast."""
        texture = rng.uniform(0.2, 0.7, (64, 64))
        cast = np.array([1.15, 1.0, 0.85])
        img = texture[..., None] * cast
        ill = grayness_index_estimate(img)
        assert ill.as_array() == pytest.approx(np.array([0.85 / 1.15, 0.85, 1.0]), abs=1e-9)
        corrected = apply_gains(img, ill)
        assert np.allclose(corrected[..., 0], corrected[..., 1], atol=1e-6)
        assert np.allclose(corrected[..., 2], corrected[..., 1], atol=1e-6)

    def test_max_gain_component_is_exactly_one(self, rng):
        img = night_scene(32, 32, seed=7, cast=(1.1, 1.0, 0.9))
        assert max(grayness_index_estimate(img).gains) == 1.0

    def test_saturated_pixels_never_enter_the_gray_set(self, rng):
        # the blown-out band is flat and neutral, so it would win the
        # lowest-score tie if saturation did not disqualify it
        texture = rng.uniform(0.3, 0.6, (32, 32))
        img = texture[..., None] * np.array([1.2, 1.0, 0.8])
        img[:8] = 1.0
        ill = grayness_index_estimate(img)
        assert ill.as_array() == pytest.approx(np.array([2.0 / 3.0, 0.8, 1.0]), abs=1e-9)

    def test_score_modes_agree_on_flat_chroma(self, rng):
        img = rng.uniform(0.2, 0.7, (32, 32))[..., None] * np.array([1.1, 1.0, 0.9])
        a = grayness_index_estimate(img, score="hypot")
        b = grayness_index_estimate(img, score="sum")
        assert a.as_array() == pytest.approx(b.as_array(), abs=1e-9)

    def test_unknown_score_rejected(self, rng):
        with pytest.raises(ValueError, match="score"):
            grayness_index_estimate(rng.uniform(0.1, 0.9, (20, 20, 3)), score="l1")

    def test_image_below_16px_rejected(self):
        with pytest.raises(ImageTooSmallError):
            grayness_index_estimate(np.full((15, 32, 3), 0.5))

    def test_fully_saturated_image_rejected(self):
        with pytest.raises(DegenerateImageError, match="unsaturated"):
            grayness_index_estimate(np.ones((20, 20, 3)))

    def test_non_rgb_shape_rejected(self):
        with pytest.raises(DegenerateImageError):
            grayness_index_estimate(np.zeros((20, 20)))


class TestEstimateOnCleanApplyToBlended:
    def test_matches_manual_composition(self, rng):
        clean = rng.uniform(0.2, 0.6, (24, 24))[..., None] * np.array([1.1, 1.0, 0.9])
        blended = np.clip(clean + rng.normal(0.0, 0.01, clean.shape), 0.0, 1.0)
        out = estimate_on_clean_apply_to_blended(clean, blended)
        expected = apply_gains(blended, grayness_index_estimate(clean))
        assert np.array_equal(out, expected)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionMismatchError):
            estimate_on_clean_apply_to_blended(np.zeros((20, 20, 3)), np.zeros((20, 22, 3)))
