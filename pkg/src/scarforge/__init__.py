"""scarforge: deterministic synthetic myocardial-scar datasets for cardiac
LGE MRI, plus the embedding-space math to consume them."""

from .anatomy import (
    Extent,
    ScarSpec,
    SliceLevel,
    WallLocation,
    angular_segments,
    candidate_region,
    concentric_layers,
    location_to_segments,
    thickness_at,
)
from .captions import (
    Caption,
    generate_negative_caption,
    generate_positive_caption,
    inference_queries,
    parse_caption,
)
from .contrastive import EmbeddingBatch, balanced_accuracy, clip_loss, l2_normalize, similarity, zero_shot_decide
from .dataset import AugmentedRecord, DatasetRecord, Provenance, load_image, read_manifest, save_image
from .orientation import normalize_orientation, orientation_angle
from .preprocess import PreprocessOutput, preprocess
from .raster import (
    AffineTransform,
    GrayImage,
    LabeledMask,
    Point2,
    centroid,
    distance_transform,
    gaussian_smooth,
    minmax_normalize,
    percentile,
    rasterize_ellipse,
    resample,
    rotate_about,
)
from .rng import SplitMix64, derive_record_seed
from .synth import (
    AugmentResult,
    PreparedSlice,
    ScarParams,
    SynthConfig,
    augment_record,
    blend,
    sample_scar_spec,
    synthesize_scar_field,
)

__version__ = "0.1.0"
