"""
Warping package: differentiable raster sampling and view synthesis.
"""

from src.warping.sampling import (
    Sampled,
    bilinear_sample,
    in_bounds,
    nearest_sample,
    round_half_away,
    sample_depth,
)
from src.warping.synthesis import (
    Synthesized,
    synthesize_labels,
    synthesize_view,
    warp_coordinates,
)

__all__ = [
    "Sampled",
    "bilinear_sample",
    "in_bounds",
    "nearest_sample",
    "round_half_away",
    "sample_depth",
    "Synthesized",
    "synthesize_labels",
    "synthesize_view",
    "warp_coordinates",
]
