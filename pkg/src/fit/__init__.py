"""
Direct fitting package: depth and pose recovery by minimising the total loss.
"""

from src.fit.optimizer import (
    FD_STEP_DEPTH,
    FD_STEP_POSE,
    Evaluation,
    FitResult,
    Gradient,
    evaluate,
    finite_difference,
    fit_snippet,
    freeze,
    gradient,
    initial_state,
    perturbed_pose,
    snippet_for_target,
    source_indices,
    target_indices,
)

__all__ = [
    "FD_STEP_DEPTH",
    "FD_STEP_POSE",
    "Evaluation",
    "FitResult",
    "Gradient",
    "evaluate",
    "finite_difference",
    "fit_snippet",
    "freeze",
    "gradient",
    "initial_state",
    "perturbed_pose",
    "snippet_for_target",
    "source_indices",
    "target_indices",
]
