"""Exception hierarchy shared across the toolkit.

Every error carries a stable ``code`` string so batch tooling and bindings
can report failures without parsing messages.
"""


class TilepackError(Exception):
    code = "tilepack_error"


class ConfigurationError(TilepackError):
    code = "config_error"


class ValidationError(TilepackError):
    code = "validation_error"


class DecodeError(TilepackError):
    code = "decode_error"


class LayoutError(TilepackError):
    code = "layout_error"


class AugmentationError(TilepackError):
    code = "augmentation_error"


class FormatError(TilepackError):
    code = "format_error"


class OversizeSampleError(TilepackError):
    code = "oversize_sample"


class ScorerUnavailableError(TilepackError):
    code = "scorer_unavailable"
