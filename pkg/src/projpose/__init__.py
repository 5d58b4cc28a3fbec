"""Planar point volumes, their axis projections, and rotation-aware pose
inference.

The package answers two linked questions about a volume made of weighted
points: do rotations act unambiguously on its projected images, and can a
variational autoencoder with a circle-valued latent recover poses from
those images?  The first is decided exactly; the second is demonstrated
by training and scoring on synthetic data.
"""

from .compatibility import (
    CoincidencePair,
    CompatibilityVerdict,
    GroupActionReport,
    RasterSettings,
    StarViolation,
    check_injectivity,
    check_injectivity_algebraic,
    check_star,
    find_coincidences,
    random_compatible_volume,
    verify_group_action,
)
from .dataset import (
    Dataset,
    PoseSample,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from .errors import (
    ConstructionFailureError,
    DatasetParseError,
    IncompatibleVolumeError,
    InsufficientDataError,
    InvalidArgumentError,
    NumericError,
    OutOfDomainError,
    ProjposeError,
    ShapeError,
    TooManyPointsError,
    TrainingDivergenceError,
    TrainingFailureError,
    UnsupportedDimensionError,
)
from .evaluate import (
    PoseReport,
    align_poses,
    alignment_spearman,
    emit_plots,
    fold_score,
    format_report,
    infer_poses,
)
from .geometry import (
    Image1D,
    PointVolume,
    ProjectedMasses,
    Rotation,
    apply_rotation,
    canonical_angle,
    circular_distance,
    compose,
    identity_rotation,
    image_distance,
    inverse,
    load_volume,
    pixel_centers,
    project,
    random_rotation,
    rasterize,
    render_volume,
    rotation_from_angle,
    rotation_from_matrix,
    save_volume,
    wrap_angle,
)
from .vae import (
    EncoderOutput,
    IrrepEmbedding,
    TrainConfig,
    VaeModel,
    decode,
    encode,
    irrep_matrix,
    load_model,
    loss,
    reparametrize,
    save_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "CoincidencePair",
    "CompatibilityVerdict",
    "ConstructionFailureError",
    "Dataset",
    "DatasetParseError",
    "EncoderOutput",
    "GroupActionReport",
    "Image1D",
    "IncompatibleVolumeError",
    "InsufficientDataError",
    "InvalidArgumentError",
    "IrrepEmbedding",
    "NumericError",
    "OutOfDomainError",
    "PointVolume",
    "PoseReport",
    "PoseSample",
    "ProjectedMasses",
    "ProjposeError",
    "RasterSettings",
    "Rotation",
    "ShapeError",
    "StarViolation",
    "TooManyPointsError",
    "TrainConfig",
    "TrainingDivergenceError",
    "TrainingFailureError",
    "UnsupportedDimensionError",
    "VaeModel",
    "align_poses",
    "alignment_spearman",
    "apply_rotation",
    "canonical_angle",
    "check_injectivity",
    "circular_distance",
    "check_injectivity_algebraic",
    "check_star",
    "compose",
    "decode",
    "emit_plots",
    "encode",
    "find_coincidences",
    "fold_score",
    "format_report",
    "generate_dataset",
    "identity_rotation",
    "image_distance",
    "infer_poses",
    "inverse",
    "irrep_matrix",
    "load_dataset",
    "load_model",
    "load_volume",
    "loss",
    "pixel_centers",
    "project",
    "random_compatible_volume",
    "random_rotation",
    "rasterize",
    "render_volume",
    "reparametrize",
    "rotation_from_angle",
    "rotation_from_matrix",
    "save_dataset",
    "save_model",
    "save_volume",
    "train",
    "verify_group_action",
    "wrap_angle",
]
