"""Exception types raised by the rendering pipeline."""


class NightforgeError(Exception):
    """Base class for all pipeline errors."""


class MalformedPngError(NightforgeError):
    """RAW PNG has the wrong bit depth, channel count, or inconsistent pixel data."""


class MalformedMetadataError(NightforgeError):
    """Metadata JSON is missing a field or violates an invariant."""


class SingularMatrixError(NightforgeError):
    """Color matrix is not invertible."""


class DegenerateImageError(NightforgeError):
    """Image content is unusable for an estimation step (all black, all saturated, ...)."""


class InvalidGammaError(NightforgeError):
    """Gamma exponent outside its valid range."""


class InvalidMeanError(NightforgeError):
    """Mean luminance outside (0, 1), where the gamma rule has log singularities."""


class DimensionMismatchError(NightforgeError):
    """Two planes or images that must share dimensions do not."""


class BadDimsError(NightforgeError):
    """Image dimensions violate a precondition (odd mosaic size, too few rows, ...)."""


class EmptyProfileError(NightforgeError):
    """Noise profile metadata contains no coefficients."""


class ImageTooSmallError(NightforgeError):
    """Image is smaller than the denoiser's block/patch size."""


class PipelineStageError(NightforgeError):
    """Wraps any error raised inside the pipeline, annotated with the failing stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
