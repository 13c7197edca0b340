"""Discrete circular probability densities for object orientation.

Represent an orientation angle as a density over N evenly spaced
directions, convert in both directions, fuse independent estimates by
elementwise product, derive priors from segmentation masks and image
position, and score predictions with error-population reports.
"""

from .core import (
    ConversionConfig,
    Density,
    FusionError,
    angle_to_vector,
    angular_distance,
    bin_angles,
    canonical_angle,
    decode,
    decode_with_score,
    encode,
    fuse,
    kl_divergence,
    vector_to_angle,
)
from .dataset import (
    FoldSplit,
    HandAnnotation,
    PredictionRecord,
    load_annotations,
    save_annotations,
    split_folds,
    synthetic_predict,
)
from .evaluate import (
    ErrorPopulationReport,
    angular_error,
    evaluate_pipeline,
    pipeline_errors,
    population_report,
    render_text,
    report_json,
)
from .figures import population_chart, radar_svg
from .priors import (
    DensityGrid,
    HandBox,
    RegionMask,
    RegionPrior,
    RegionPriorConfig,
    grid_query,
    grid_train,
    region_prior,
)

__version__ = "0.1.0"

__all__ = [
    "ConversionConfig",
    "Density",
    "DensityGrid",
    "ErrorPopulationReport",
    "FoldSplit",
    "FusionError",
    "HandAnnotation",
    "HandBox",
    "PredictionRecord",
    "RegionMask",
    "RegionPrior",
    "RegionPriorConfig",
    "angle_to_vector",
    "angular_distance",
    "angular_error",
    "bin_angles",
    "canonical_angle",
    "decode",
    "decode_with_score",
    "encode",
    "evaluate_pipeline",
    "fuse",
    "grid_query",
    "grid_train",
    "kl_divergence",
    "load_annotations",
    "pipeline_errors",
    "population_chart",
    "population_report",
    "radar_svg",
    "region_prior",
    "render_text",
    "report_json",
    "save_annotations",
    "split_folds",
    "synthetic_predict",
    "vector_to_angle",
]
