"""Superpixel segmentation by spatially constrained sparse subspace clustering."""

from .errors import InvalidInputError, NumericalError
from .units import (
    ImageBuffer,
    UnitMap,
    FeatureMatrix,
    oversegment,
    extract_features,
    unit_adjacency,
)
from .weights import SpatialWeights, build_weight_matrix, spatial_penalty
from .solver import AdmmConfig, AdmmState, SolveReport, solve, objective
from .cluster import SuperpixelLabeling, affinity, ncut, merge_isolated
from .metrics import GroundTruth, MetricReport, asa, use, br, evaluate_multi
from .pipeline import PipelineConfig, RunArtifacts, segment_image

__version__ = "0.1.0"

__all__ = [
    "InvalidInputError",
    "NumericalError",
    "ImageBuffer",
    "UnitMap",
    "FeatureMatrix",
    "oversegment",
    "extract_features",
    "unit_adjacency",
    "SpatialWeights",
    "build_weight_matrix",
    "spatial_penalty",
    "AdmmConfig",
    "AdmmState",
    "SolveReport",
    "solve",
    "objective",
    "SuperpixelLabeling",
    "affinity",
    "ncut",
    "merge_isolated",
    "GroundTruth",
    "MetricReport",
    "asa",
    "use",
    "br",
    "evaluate_multi",
    "PipelineConfig",
    "RunArtifacts",
    "segment_image",
]
