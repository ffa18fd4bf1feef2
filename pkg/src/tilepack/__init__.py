"""Multimodal training-data preprocessing toolkit.

Covers the full preprocessing path for vision-language training corpora:
dynamic high-resolution tiling, visual-token accounting and conversation
rendering, two-dimensional sequence packing, dataset mixing with repeat
factors, corpus filtering, JPEG-compression augmentation, and loss-weight
computation.
"""

from .errors import (
    AugmentationError,
    ConfigurationError,
    DecodeError,
    FormatError,
    LayoutError,
    OversizeSampleError,
    ScorerUnavailableError,
    TilepackError,
    ValidationError,
)
from .filtering import (
    Decision,
    FilterVerdict,
    RuleConfig,
    StubScorer,
    Thresholds,
    filter_corpus,
    filter_record,
    heuristic_scan,
    quality_gate,
    repetition_score,
)
from .geometry import (
    GridRatio,
    ImageDims,
    TileBudget,
    TileLayout,
    allocate_multi_image,
    enumerate_target_ratios,
    plan_layout,
    plan_video_frames,
    select_closest_ratio,
)
from .mixing import (
    DatasetConfig,
    Draw,
    MixturePlan,
    build_epoch,
    expand_repeats,
    mixture_stats,
    validate_config,
)
from .packing import (
    PackedSequence,
    PackerConfig,
    SampleUnit,
    SequencePacker,
    TokenBlock,
    pack_pair,
    search_buffer,
    select_truncate,
)
from .raster import (
    AugmentPolicy,
    RasterImage,
    jpeg_compress_augment,
    load_image,
    make_thumbnail,
    resize_image,
    save_image,
    split_tiles,
)
from .rendering import (
    Modality,
    RenderedSample,
    TokenBudget,
    estimate_sample_tokens,
    parse_rendered,
    render_multi_image,
    render_single_image,
    render_text,
    render_video,
    visual_tokens_for,
)
from .weighting import (
    ResponseSpan,
    WeightStrategy,
    normalized_weights,
    raw_weights,
    weighted_loss,
)

__version__ = "0.1.0"
