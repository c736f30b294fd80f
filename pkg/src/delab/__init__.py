"""Density-evolution laboratory for LDPC/LDGM ensembles on BMS channels.

Quantized symmetric-measure algebra, single-system and spatially-coupled
density evolution, potential functionals and energy gaps, and the
threshold estimators built on them.
"""

__version__ = "0.1.0"

from .measure import (
    GridSpec,
    HatMeasure,
    bec_measure,
    bhattacharyya,
    check_conv,
    delta0,
    delta_inf,
    entropy,
    entropy_distance,
    error_prob,
    from_points,
    is_degraded,
    mix,
    moment,
    poly_check,
    poly_var,
    var_conv,
)

__all__ = [
    "GridSpec",
    "HatMeasure",
    "bec_measure",
    "bhattacharyya",
    "check_conv",
    "delta0",
    "delta_inf",
    "entropy",
    "entropy_distance",
    "error_prob",
    "from_points",
    "is_degraded",
    "mix",
    "moment",
    "poly_check",
    "poly_var",
    "var_conv",
    "__version__",
]
