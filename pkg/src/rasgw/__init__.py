"""Relation-aware sliced Gromov-Wasserstein discrepancies between point clouds."""

from ._kernels import BACKEND
from .core import (
    CloudParseError,
    DomainError,
    Energy,
    EstimatorSpec,
    Family,
    Method,
    PointCloud,
    RngStream,
    ScaleFamily,
    UnitDirection,
    apply_negation,
    apply_translation,
    center,
    load_csv,
    match_sizes,
    pad_to_common,
    pad_uplift,
    save_csv,
)
from .estimators import (
    EstimateResult,
    estimate,
    estimate_dsgw,
    estimate_ebsgw,
    estimate_iwrasgw,
    estimate_max_sgw,
    estimate_rasgw,
    estimate_rpsgw,
    estimate_sgw,
    sliced_gw_costs,
)

__version__ = "0.1.0"
