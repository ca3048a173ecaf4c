"""
Semantic terms: inconsistency mask, semantic reconstruction loss and the
road depth-ordering prior.

Label maps are (H, W) int64 tensors with class ids 0..18; IGNORE_LABEL
marks pixels without a label. Ignored pixels never count as inconsistent.
"""

from typing import NamedTuple, Sequence

import torch

from src.losses.reduction import masked_mean, stack_valid
from src.models.camera import DTYPE
from src.models.losses import IGNORE_LABEL


def labelled(labels: torch.Tensor) -> torch.Tensor:
    return labels != IGNORE_LABEL


def semantic_mask(
    labels_target: torch.Tensor,
    labels_synthesized: torch.Tensor,
    valid: torch.Tensor,
) -> torch.Tensor:
    """
    M = [S_t != Ŝ_{t'->t}] on valid, labelled pixels; False everywhere else.
    """
    return (
        (labels_target != labels_synthesized)
        & valid
        & labelled(labels_target)
        & labelled(labels_synthesized)
    )


class SemanticLossResult(NamedTuple):
    value: torch.Tensor
    per_pixel: torch.Tensor
    counted: torch.Tensor


def semantic_loss(
    labels_target: torch.Tensor,
    labels_synthesized: Sequence[torch.Tensor],
    valid: Sequence[torch.Tensor],
) -> SemanticLossResult:
    """
    Mean over counted pixels of the minimum over sources of [S_t != Ŝ].

    A source counts at a pixel when its sample is valid and labelled; a pixel
    counts when the target is labelled and at least one source counts.
    """
    usable = [v & labelled(s) for s, v in zip(labels_synthesized, valid)]
    mismatch = [(labels_target != s).to(DTYPE) for s in labels_synthesized]
    per_pixel = stack_valid(mismatch, usable).min(dim=0).values
    counted = torch.isfinite(per_pixel) & labelled(labels_target)
    return SemanticLossResult(
        value=masked_mean(per_pixel, counted),
        per_pixel=torch.where(counted, per_pixel, torch.zeros_like(per_pixel)),
        counted=counted,
    )


class RoadOrderingResult(NamedTuple):
    value: torch.Tensor
    surrogate: torch.Tensor
    count: int
    violations: torch.Tensor


def road_mask(labels: torch.Tensor, road_class_ids: Sequence[int]) -> torch.Tensor:
    road = torch.zeros_like(labels, dtype=torch.bool)
    for class_id in road_class_ids:
        road |= labels == class_id
    return road


def road_ordering_loss(
    depth: torch.Tensor,
    labels: torch.Tensor,
    road_class_ids: Sequence[int] = (0, 1),
) -> RoadOrderingResult:
    """
    Vertical depth-ordering prior on road pixels.

    A violation is a road pixel (u, v) whose upper neighbour (u, v-1) is also
    road but is not deeper: D(u, v) > D(u, v-1). `value` is the violation
    count over H*W; `surrogate` replaces each violation by the hinge
    max(0, D(u, v) - D(u, v-1)) so it carries a gradient.
    """
    depth = depth.to(DTYPE)
    road = road_mask(labels, road_class_ids)
    pairs = road[1:, :] & road[:-1, :]
    step = depth[1:, :] - depth[:-1, :]
    violations = pairs & (step > 0)
    n_pixels = depth.numel()

    count = int(violations.sum())
    hinge = torch.where(pairs, torch.clamp(step, min=0.0), torch.zeros_like(step))
    violation_map = torch.zeros_like(labels, dtype=torch.bool)
    violation_map[1:, :] = violations
    return RoadOrderingResult(
        value=torch.tensor(count / n_pixels, dtype=DTYPE),
        surrogate=hinge.sum() / n_pixels,
        count=count,
        violations=violation_map,
    )
