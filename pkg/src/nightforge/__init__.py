"""RAW-to-JPEG rendering engine for night photographs.

A shallow, fully handcrafted ISP: preliminary RAW preparation (normalize,
demosaic, Gray World white balance, color transform) followed by the
low-light chain (local contrast correction, histogram stretch, saturation,
black point, gamma, sharpening, resize, BM3D or NLM denoising with a
detail-preserving blend, and a final Grayness Index white balance).
"""

from .colorspace import (
    ImagePlanar,
    camera_to_srgb,
    camera_to_srgb_matrix,
    gamma_encode,
    luma,
    normalize_raw,
    quantize_8bit,
    rgb_to_hsv_value,
    rgb_to_ycbcr,
    to_uint8,
    ycbcr_to_rgb,
)
from .config import PipelineConfig
from .demosaic import CfaLayout, demosaic_bilinear
from .denoise import (
    BlendParams,
    Bm3dParams,
    NoiseClass,
    blend_masked,
    bm3d,
    classify_noise,
    nlm,
)
from .errors import (
    BadDimsError,
    DegenerateImageError,
    DimensionMismatchError,
    EmptyProfileError,
    ImageTooSmallError,
    InvalidGammaError,
    InvalidMeanError,
    MalformedMetadataError,
    MalformedPngError,
    NightforgeError,
    PipelineStageError,
    SingularMatrixError,
)
from .frame_io import (
    FrameMetadata,
    Orientation,
    OutputSpec,
    RawFrame,
    apply_orientation,
    load_raw,
    resize_to_output,
    save_jpeg,
)
from .illuminant import (
    Illuminant,
    apply_gains,
    estimate_on_clean_apply_to_blended,
    gray_world_estimate,
    grayness_index_estimate,
)
from .local_contrast import LccResult, build_mask, compute_gamma, lcc_apply, run_lcc
from .pipeline import (
    LOW_LIGHT_STAGES,
    PRELIMINARY_STAGES,
    STAGE_NAMES,
    StageReport,
    emit_stage_histograms,
    emit_timing_csv,
    emit_timing_table,
    run_pipeline,
)
from .tone import (
    DarkPixelRule,
    Histogram256,
    StretchRange,
    apply_stretch,
    black_point_correct,
    chroma_radius,
    count_dark,
    saturation_enhance,
    stretch_range,
    unsharp_mask,
)

__version__ = "0.1.0"
