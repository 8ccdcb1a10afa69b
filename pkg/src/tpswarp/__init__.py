"""Landmark-driven thin-plate-spline image alignment.

The package solves smooth 2-D warps from corresponding landmark groups,
rasterizes them into dense sampling fields, resamples images through those
fields with exact analytic gradients, and provides the loss kernels an
image-translation training loop consumes, all on plain numpy arrays.
"""

from .errors import FormatError, GeometryError, SingularSystemError, TpsWarpError
from .kernels import run_kernel_op, run_manifest
from .landmarks import (
    LandmarkGroup,
    LandmarkSet,
    denormalize_points,
    downscale_landmarks,
    load_landmarks,
    normalize_points,
    save_landmarks,
)
from .losses import (
    LossWeights,
    SimilarityMapSet,
    cycle_loss,
    embedding_cosine_distance,
    feature_matching_loss,
    gan_loss_discriminator,
    gan_loss_generator,
    interior_query_grid,
    spatial_correlative_loss,
    spatial_correlative_maps,
    total_loss,
)
from .pipeline import (
    AlignedPair,
    align_style_to_portrait,
    branch_pairings,
    build_warp,
    multiscale_fields,
)
from .sampler import (
    FeatureMap,
    grid_sample,
    grid_sample_backward,
    upsample_field,
    warp_image,
)
from .tensorio import read_tensor, write_tensor
from .tps import TpsTransform, bending_energy, eval_tps, rbf_u, solve_tps
from .warp_field import (
    WarpField,
    blend_group_fields,
    identity_field,
    rasterize_group_field,
    read_field,
    write_field,
)

__version__ = "0.1.0"

__all__ = [
    "AlignedPair",
    "FeatureMap",
    "FormatError",
    "GeometryError",
    "LandmarkGroup",
    "LandmarkSet",
    "LossWeights",
    "SimilarityMapSet",
    "SingularSystemError",
    "TpsTransform",
    "TpsWarpError",
    "WarpField",
    "align_style_to_portrait",
    "bending_energy",
    "blend_group_fields",
    "branch_pairings",
    "build_warp",
    "cycle_loss",
    "denormalize_points",
    "downscale_landmarks",
    "embedding_cosine_distance",
    "eval_tps",
    "feature_matching_loss",
    "gan_loss_discriminator",
    "gan_loss_generator",
    "grid_sample",
    "grid_sample_backward",
    "identity_field",
    "interior_query_grid",
    "load_landmarks",
    "multiscale_fields",
    "normalize_points",
    "rasterize_group_field",
    "rbf_u",
    "read_field",
    "read_tensor",
    "run_kernel_op",
    "run_manifest",
    "save_landmarks",
    "solve_tps",
    "spatial_correlative_loss",
    "spatial_correlative_maps",
    "total_loss",
    "upsample_field",
    "warp_image",
    "write_field",
    "write_tensor",
]
