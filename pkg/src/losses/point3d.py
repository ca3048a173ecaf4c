"""
3D point consistency loss.

For a target pixel p with depth D_t(p) the loss compares its camera point
P_t with the point recovered from the source view: p is reprojected into
source t', the source depth is read there by bilinear sampling, backprojected
to P_{t'} and carried back into the target frame with T_{t'->t}.
"""

from typing import NamedTuple, Optional, Sequence

import torch

from src.geometry.camera import backproject, pixel_grid, project_pixel, transform
from src.geometry.se3 import inverse
from src.losses.reduction import masked_mean, select_min, stack_valid
from src.models.camera import DTYPE, Intrinsics, PoseSE3
from src.warping.sampling import sample_depth


def point_error(p: torch.Tensor, q: torch.Tensor) -> torch.Tensor:
    """L1 distance between points along the last axis."""
    return (torch.as_tensor(p, dtype=DTYPE) - torch.as_tensor(q, dtype=DTYPE)).abs().sum(dim=-1)


class PointErrorMap(NamedTuple):
    pe: torch.Tensor
    valid: torch.Tensor


def point_error_map(
    K: Intrinsics,
    depth_target: torch.Tensor,
    depth_source: torch.Tensor,
    pose_tgt_to_src: PoseSE3,
) -> PointErrorMap:
    """(H, W) point error against one source and its validity."""
    depth_target = depth_target.to(DTYPE)
    u, v = pixel_grid(*depth_target.shape)
    point_target = backproject(K, u, v, depth_target)

    proj = project_pixel(K, pose_tgt_to_src, depth_target, u, v)
    sampled = sample_depth(depth_source, proj.u, proj.v)
    point_source = backproject(K, proj.u, proj.v, sampled.values)
    point_back = transform(inverse(pose_tgt_to_src), point_source)

    return PointErrorMap(
        pe=point_error(point_target, point_back),
        valid=sampled.valid & proj.in_front,
    )


class PointLossResult(NamedTuple):
    value: torch.Tensor
    pe: torch.Tensor
    mpe: torch.Tensor
    selected: torch.Tensor
    keep: torch.Tensor
    valid: torch.Tensor


def point_loss_3d(
    depth_target: torch.Tensor,
    depth_sources: Sequence[torch.Tensor],
    K: Intrinsics,
    poses: Sequence[PoseSE3],
    masks: Optional[Sequence[torch.Tensor]],
    h: float = 320.0,
    frozen_selected: Optional[torch.Tensor] = None,
    frozen_keep: Optional[torch.Tensor] = None,
) -> PointLossResult:
    """
    Masked 3D point loss.

    mpe = pe + h M per source; each pixel keeps its minimum mpe over sources
    only when it is below h, i.e. at least one valid source is consistent.
    The mean runs over kept pixels.

    Args:
        depth_target: (H, W) D_t
        depth_sources: D_{t'} per source
        K: Intrinsics
        poses: T_{t->t'} per source
        masks: M_{t'} per source or None for M = 0
        h: penalty and threshold

    Returns:
        PointLossResult with the scalar and per-pixel maps
    """
    maps = [
        point_error_map(K, depth_target, depth_source, pose)
        for depth_source, pose in zip(depth_sources, poses)
    ]
    pe = torch.stack([m.pe for m in maps])
    valid = [m.valid for m in maps]
    if masks is None:
        penalty = torch.zeros_like(pe)
    else:
        penalty = h * torch.stack([m.to(DTYPE) for m in masks]).detach()
    mpe = pe + penalty

    selection = select_min(stack_valid(list(mpe), valid), frozen_selected)
    if frozen_keep is not None:
        keep = frozen_keep & torch.isfinite(selection.value.detach())
    else:
        keep = selection.value.detach() < h
    return PointLossResult(
        value=masked_mean(selection.value, keep),
        pe=pe,
        mpe=mpe,
        selected=selection.index,
        keep=keep,
        valid=torch.stack(valid),
    )
