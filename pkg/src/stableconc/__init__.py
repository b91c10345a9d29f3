"""Concentration bounds for stable random vectors, with samplers and Monte Carlo checks."""

__version__ = "0.1.0"

from .levy_core import (  # noqa: E402
    AxisLevySpec,
    SpecError,
    SpectralMeasure,
    StableSpec,
    TruncationSplit,
    c_alpha,
    c_alpha_d,
    prob_Z_nonzero,
    truncate,
)
from .stable_bounds import (  # noqa: E402
    BoundResult,
    theorem1_bound,
    theorem1_general,
    theorem2_bound,
    theorem3_bound,
)

__all__ = [
    "AxisLevySpec",
    "BoundResult",
    "SpecError",
    "SpectralMeasure",
    "StableSpec",
    "TruncationSplit",
    "c_alpha",
    "c_alpha_d",
    "prob_Z_nonzero",
    "theorem1_bound",
    "theorem1_general",
    "theorem2_bound",
    "theorem3_bound",
    "truncate",
]
