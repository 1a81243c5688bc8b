"""Deliberative Reason Index: standard and low-signal-penalized scoring,
synthetic validation, and pre/post case analysis."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    CorrelationGrid,
    CorrelationPair,
    DriConfig,
    DriResult,
    adjusted_distance,
    correlate,
    dri,
    orthogonal_distance,
    pair_grid,
    penalty_weight,
    rank_with_midranks,
)
from .datagen import DesignPoint, LatentModel, ResponseDataset, design_grid, generate_group, split_half  # noqa: E402
from .errors import ComputationError, DriError, ParseError, UsageError, ValidationError  # noqa: E402

__all__ = [
    "ComputationError",
    "CorrelationGrid",
    "CorrelationPair",
    "DesignPoint",
    "DriConfig",
    "DriError",
    "DriResult",
    "LatentModel",
    "ParseError",
    "ResponseDataset",
    "UsageError",
    "ValidationError",
    "adjusted_distance",
    "correlate",
    "design_grid",
    "dri",
    "generate_group",
    "orthogonal_distance",
    "pair_grid",
    "penalty_weight",
    "rank_with_midranks",
    "split_half",
]
