"""Stage order, wiring, timing output, and histogram capture."""

import numpy as np
import pytest

from nightforge import (
    CfaLayout,
    DegenerateImageError,
    PipelineConfig,
    PipelineStageError,
    StageReport,
    apply_gains,
    camera_to_srgb,
    demosaic_bilinear,
    emit_stage_histograms,
    emit_timing_csv,
    emit_timing_table,
    gray_world_estimate,
    normalize_raw,
    run_pipeline,
)
from nightforge.colorspace import ENCODED_SRGB
from nightforge.pipeline import LOW_LIGHT_STAGES, PRELIMINARY_STAGES, STAGE_NAMES

from synth import make_frame, make_metadata, night_scene, quantize_counts

# tiny output geometry keeps every full-pipeline unit run under a second
_FAST = {"landscape_size": (48, 32), "portrait_size": (32, 48)}


def _fast_config(**overrides):
    merged = dict(_FAST)
    merged.update(overrides)
    return PipelineConfig.defaults().updated(merged).validate()


@pytest.fixture(scope="module")
def frame():
    return make_frame(night_scene(64, 96, seed=11), pattern=(0, 1, 1, 2))


class TestStageRoster:
    def test_order_is_fixed(self):
        assert STAGE_NAMES == (
            "normalize", "demosaic", "gray_world_awb", "camera_to_srgb",
            "lcc", "contrast_stretch", "saturation_enhance", "black_point",
            "global_gamma", "unsharp", "quantize_8bit", "resize",
            "denoise", "detail_blend", "gi_awb", "orientation",
        )

    def test_split_into_preliminary_and_low_light(self):
        assert len(PRELIMINARY_STAGES) == 4 and len(LOW_LIGHT_STAGES) == 12
        assert PRELIMINARY_STAGES + LOW_LIGHT_STAGES == STAGE_NAMES


class TestRunPipeline:
    def test_full_run_produces_tagged_srgb_at_output_size(self, frame):
        final, reports = run_pipeline(frame, _fast_config())
        assert final.space == ENCODED_SRGB
        assert final.data.shape == (32, 48, 3)
        assert np.isfinite(final.data).all()
        assert final.data.min() >= 0.0 and final.data.max() <= 1.0
        assert [r.name for r in reports] == list(STAGE_NAMES)
        assert all(r.seconds >= 0.0 for r in reports)

    def test_runs_are_bit_identical(self, frame):
        a, _ = run_pipeline(frame, _fast_config())
        b, _ = run_pipeline(frame, _fast_config())
        assert np.array_equal(a.data, b.data)

    def test_disabled_low_light_equals_composed_preliminaries(self, frame):
        cfg = _fast_config(**{f"enable_{k}": "false" for k in (
            "lcc", "stretch", "saturation", "black_point", "global_gamma",
            "unsharp", "quantize", "resize", "denoise", "blend", "gi_awb",
            "orientation")})
        final, reports = run_pipeline(frame, cfg)
        assert [r.name for r in reports] == list(PRELIMINARY_STAGES)
        mosaic = normalize_raw(frame, dtype=np.float32)
        rgb = demosaic_bilinear(mosaic, CfaLayout.from_pattern(frame.meta.cfa_pattern))
        rgb = apply_gains(rgb, gray_world_estimate(rgb))
        rgb = camera_to_srgb(rgb, frame.meta)
        assert np.array_equal(final.data, rgb)

    def test_portrait_orientation_lands_on_portrait_size(self):
        tall = make_frame(night_scene(96, 64, seed=4), pattern=(0, 1, 1, 2))
        final, _ = run_pipeline(tall, _fast_config())
        assert final.data.shape == (48, 32, 3)

    def test_rotated_metadata_swaps_the_output_axes(self):
        rot = make_frame(night_scene(64, 96, seed=4), pattern=(0, 1, 1, 2), orientation=90)
        final, _ = run_pipeline(rot, _fast_config())
        # 90 degree turn of a landscape render is portrait
        assert final.data.shape == (48, 32, 3)

    def test_failing_stage_is_named_in_the_error(self):
        # a frame stuck at the black level normalizes to all zeros, which the
        # gray world estimator refuses
        dead = make_frame(np.zeros((16, 16, 3)), pattern=(0, 1, 1, 2))
        with pytest.raises(PipelineStageError, match="gray_world_awb") as exc_info:
            run_pipeline(dead, _fast_config())
        assert exc_info.value.stage == "gray_world_awb"
        assert isinstance(exc_info.value.cause, DegenerateImageError)

    def test_denoiser_none_passes_the_image_through(self, frame):
        final, reports = run_pipeline(frame, _fast_config(denoiser="none"))
        assert np.isfinite(final.data).all()
        names = [r.name for r in reports]
        assert "denoise" in names and "detail_blend" in names

    def test_luma_only_denoising_runs(self, frame):
        cfg = _fast_config(denoiser="nlm", denoise_channels="luma")
        final, _ = run_pipeline(frame, cfg)
        assert np.isfinite(final.data).all()

    def test_stretch_without_lcc_uses_current_luma_for_both_planes(self, frame):
        cfg = _fast_config(enable_lcc="false")
        final, reports = run_pipeline(frame, cfg)
        assert "lcc" not in [r.name for r in reports]
        assert np.isfinite(final.data).all()


class TestHistogramCapture:
    def test_capture_records_256_bins_around_every_stage(self, frame):
        _, reports = run_pipeline(frame, _fast_config(), capture_histograms=True)
        # the first stage's input is the raw frame itself, which has no
        # unit-range luma plane to bin
        assert reports[0].hist_before is None
        for rep in reports[1:]:
            assert rep.hist_before.shape == (256,)
        for rep in reports:
            assert rep.hist_after.shape == (256,)
            assert rep.hist_after.sum() > 0

    def test_capture_totals_match_pixel_counts(self, frame):
        _, reports = run_pipeline(frame, _fast_config(), capture_histograms=True)
        by_name = {r.name: r for r in reports}
        # after the resize every stage sees the output geometry
        assert by_name["denoise"].hist_after.sum() == 48 * 32
        assert by_name["normalize"].hist_after.sum() == 64 * 96

    def test_capture_off_leaves_fields_empty(self, frame):
        _, reports = run_pipeline(frame, _fast_config())
        assert all(r.hist_before is None and r.hist_after is None for r in reports)


class TestTimingOutput:
    def _fabricated(self):
        return [
            [StageReport("normalize", 1.0), StageReport("denoise", 9.0)],
            [StageReport("normalize", 0.872), StageReport("denoise", 9.128)],
        ]

    def test_table_shows_means_and_shares(self):
        table = emit_timing_table(self._fabricated())
        assert "Stage timing (mean of 2 runs)" in table
        assert "Preliminary steps" in table and "Low-light specific steps" in table
        # means: normalize 0.936 s (9.36%), denoise 9.064 s (90.64%)
        assert "0.9360 s" in table and "9.36%" in table
        assert "9.0640 s" in table and "90.64%" in table
        assert "100.00%" in table

    def test_table_accepts_a_single_flat_run(self):
        table = emit_timing_table([StageReport("normalize", 2.0)])
        assert "mean of 1 run" in table and "100.00%" in table

    def test_csv_rows_group_and_share(self):
        csv = emit_timing_csv(self._fabricated())
        lines = csv.splitlines()
        assert lines[0] == "group,stage,mean_seconds,percent"
        assert "preliminary,normalize,0.936000,9.36" in lines
        assert "low_light,denoise,9.064000,90.64" in lines
        assert lines[-1] == "total,total,10.000000,100.00"

    def test_empty_runs_rejected(self):
        with pytest.raises(ValueError):
            emit_timing_table([])


class TestStageHistogramFiles:
    def test_writes_one_csv_per_stage_plus_summary(self, frame, tmp_path):
        _, reports = run_pipeline(frame, _fast_config(), capture_histograms=True)
        written = emit_stage_histograms(reports, tmp_path)
        csvs = sorted(p for p in written if p.suffix == ".csv")
        assert len(csvs) == len(STAGE_NAMES)
        assert csvs[0].name == "00_normalize.csv"
        assert csvs[-1].name == "15_orientation.csv"
        first = csvs[0].read_text().splitlines()
        assert first[0] == "bin,count" and len(first) == 257
        assert (tmp_path / "summary.png").exists()

    def test_refuses_reports_without_capture(self, frame, tmp_path):
        _, reports = run_pipeline(frame, _fast_config())
        with pytest.raises(ValueError, match="capture"):
            emit_stage_histograms(reports, tmp_path)
