"""
Evaluation metrics: depth error/accuracy and snippet ATE.
"""

from src.metrics.depth import (
    compute_errors,
    depth_metrics,
    evaluate_depth_set,
    evaluation_mask,
    median_scale,
)
from src.metrics.trajectory import (
    SNIPPET_LENGTHS,
    anchored_positions,
    ate_sequence,
    ate_snippet,
    mean_odometry_baseline,
    mean_step,
    scale_alignment,
    trajectory_from_adjacent,
)

__all__ = [
    "compute_errors",
    "depth_metrics",
    "evaluate_depth_set",
    "evaluation_mask",
    "median_scale",
    "SNIPPET_LENGTHS",
    "anchored_positions",
    "ate_sequence",
    "ate_snippet",
    "mean_odometry_baseline",
    "mean_step",
    "scale_alignment",
    "trajectory_from_adjacent",
]
