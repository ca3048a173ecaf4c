"""
Total loss of one target frame: weighted sum of the image, semantic, 3D
point, road ordering and smoothness terms.
"""

from typing import Optional

import torch

from src.losses.photometric import masked_image_loss, smoothness_loss
from src.losses.point3d import point_loss_3d
from src.losses.reduction import stack_valid
from src.losses.semantic import road_ordering_loss, semantic_loss, semantic_mask
from src.models.camera import DTYPE
from src.models.losses import FrozenSelection, LossReport, LossTerms, LossWeights
from src.models.snippet import SnippetInputs
from src.utils.logger import setup_logger
from src.warping.synthesis import synthesize_labels, synthesize_view

logger = setup_logger(__name__)


def total_loss(
    inputs: SnippetInputs,
    weights: Optional[LossWeights] = None,
    terms: Optional[LossTerms] = None,
    frozen: Optional[FrozenSelection] = None,
) -> LossReport:
    """
    Evaluate every loss term on one snippet and combine them.

    report.total = λ1 L_img + λ2 L_ss + λ3 L_3D + λ4 L_road + λ5 L_smooth with
    the hard road count; report.objective is the differentiable counterpart
    (hinge surrogate for the road term, L_ss as a constant).

    Args:
        inputs: Target frame, sources and poses
        weights: Loss weights (defaults to the standard weights)
        terms: Ablation switches
        frozen: Selections reused from an earlier evaluation

    Returns:
        LossReport with term values, per-pixel maps, objective and selection
    """
    weights = weights or LossWeights()
    terms = terms or LossTerms()
    K = inputs.K
    depth = inputs.target_depth.to(DTYPE)
    height, width = depth.shape

    views = [synthesize_view(image, depth, K, pose) for image, pose in zip(inputs.source_images, inputs.poses)]
    valid = [view.valid for view in views]
    label_views = [synthesize_labels(labels, depth, K, pose) for labels, pose in zip(inputs.source_labels, inputs.poses)]

    if frozen is not None:
        masks = list(frozen.semantic_masks)
    elif terms.use_semantic_mask:
        masks = [
            semantic_mask(inputs.target_labels, label_view.values, view.valid)
            for label_view, view in zip(label_views, views)
        ]
    else:
        masks = [torch.zeros((height, width), dtype=torch.bool) for _ in views]

    image_term = masked_image_loss(
        inputs.target_image,
        [view.values for view in views],
        inputs.source_images,
        masks,
        valid,
        b=weights.b,
        alpha=weights.alpha,
        use_automask=terms.use_automask,
        frozen_selected=frozen.image_selected if frozen is not None else None,
        frozen_keep=frozen.image_keep if frozen is not None else None,
    )

    zero = torch.zeros((), dtype=DTYPE)
    ss_value = zero
    if terms.use_ss:
        ss_value = semantic_loss(
            inputs.target_labels, [lv.values for lv in label_views], [lv.valid for lv in label_views]
        ).value

    point_term = None
    point_value = zero
    if terms.use_3d:
        if inputs.source_depths is None:
            raise ValueError("the 3D point loss needs source depths")
        point_term = point_loss_3d(
            depth,
            inputs.source_depths,
            K,
            inputs.poses,
            masks,
            h=weights.h,
            frozen_selected=frozen.point_selected if frozen is not None else None,
            frozen_keep=frozen.point_keep if frozen is not None else None,
        )
        point_value = point_term.value

    road_count = 0
    road_value = zero
    road_surrogate = zero
    if terms.use_road:
        road = road_ordering_loss(depth, inputs.target_labels, weights.road_class_ids)
        road_count = road.count
        road_value = road.value
        road_surrogate = road.surrogate

    smooth_value = smoothness_loss(depth, inputs.target_image)

    img = image_term.value.detach().item()
    ss = ss_value.detach().item()
    point3d = point_value.detach().item()
    road_f = road_value.detach().item()
    smooth = smooth_value.detach().item()
    total = (
        weights.lambda_img * img
        + weights.lambda_ss * ss
        + weights.lambda_3d * point3d
        + weights.lambda_road * road_f
        + weights.lambda_smooth * smooth
    )

    objective = (
        weights.lambda_img * image_term.value
        + weights.lambda_ss * ss_value.detach()
        + weights.lambda_3d * point_value
        + weights.lambda_road * road_surrogate
        + weights.lambda_smooth * smooth_value
    )

    stacked_masks = torch.stack(masks)
    selection = FrozenSelection(
        semantic_masks=stacked_masks.detach(),
        image_selected=image_term.selected.detach(),
        image_keep=image_term.keep.detach(),
        point_selected=point_term.selected.detach() if point_term is not None else None,
        point_keep=point_term.keep.detach() if point_term is not None else None,
    )

    maps = {
        "re": image_term.re.detach(),
        "mre": image_term.mre.detach(),
        "identity_re": image_term.identity_re.detach(),
        "mu": (stack_valid(list(image_term.re), valid).min(dim=0).values < image_term.best_identity).detach(),
        "keep": image_term.keep.detach(),
        "M": stacked_masks.detach(),
        "selected": image_term.selected.detach(),
        "valid": torch.stack(valid).detach(),
    }
    if point_term is not None:
        maps["pe"] = point_term.pe.detach()
        maps["mpe"] = point_term.mpe.detach()
        maps["selected_3d"] = point_term.selected.detach()

    report = LossReport(
        img=img,
        ss=ss,
        point3d=point3d,
        road=road_f,
        smooth=smooth,
        total=total,
        road_count=road_count,
        road_surrogate=road_surrogate.detach().item(),
        kept_pixels=int(image_term.keep.sum()),
        masked_pixels=int(stacked_masks.any(dim=0).sum()),
        valid_pixels=int(torch.stack(valid).any(dim=0).sum()),
        weights=weights,
        terms=terms,
        maps=maps,
    )
    logger.debug(f"Loss evaluated: {report}")
    return report.attach(objective, selection)
