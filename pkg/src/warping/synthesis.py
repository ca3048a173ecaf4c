"""
Inverse-warping view synthesis.

Every target pixel is backprojected with the target depth, moved into the
source camera by T_{tgt->src} and looked up in the source raster. Images use
bilinear sampling, label maps use nearest-neighbour sampling; both return the
same validity mask (in bounds and in front of the source camera).
"""

from typing import NamedTuple

import torch

from src.geometry.camera import Projection, project_raster
from src.models.camera import DTYPE, Intrinsics, PoseSE3
from src.warping.sampling import bilinear_sample, nearest_sample


class Synthesized(NamedTuple):
    values: torch.Tensor
    valid: torch.Tensor
    coords: Projection


def warp_coordinates(K: Intrinsics, pose_tgt_to_src: PoseSE3, depth_tgt: torch.Tensor) -> Projection:
    """Source-view sub-pixel coordinates of every target pixel."""
    return project_raster(K, pose_tgt_to_src, depth_tgt.to(DTYPE))


def _check_shapes(src: torch.Tensor, depth_tgt: torch.Tensor) -> None:
    if tuple(src.shape[-2:]) != tuple(depth_tgt.shape):
        raise ValueError(
            f"source raster {tuple(src.shape[-2:])} and target depth "
            f"{tuple(depth_tgt.shape)} differ in size"
        )


def synthesize_view(
    image_src: torch.Tensor,
    depth_tgt: torch.Tensor,
    K: Intrinsics,
    pose_tgt_to_src: PoseSE3,
) -> Synthesized:
    """
    Reconstruct the target frame from a source image.

    Args:
        image_src: (3, H, W) source image
        depth_tgt: (H, W) target depth
        K: Intrinsics
        pose_tgt_to_src: T_{tgt->src}

    Returns:
        Synthesized image (3, H, W), validity (H, W) and the warp coordinates
    """
    _check_shapes(image_src, depth_tgt)
    coords = warp_coordinates(K, pose_tgt_to_src, depth_tgt)
    sampled = bilinear_sample(image_src.to(DTYPE), coords.u, coords.v)
    return Synthesized(values=sampled.values, valid=sampled.valid & coords.in_front, coords=coords)


def synthesize_labels(
    labels_src: torch.Tensor,
    depth_tgt: torch.Tensor,
    K: Intrinsics,
    pose_tgt_to_src: PoseSE3,
) -> Synthesized:
    """Nearest-neighbour counterpart of synthesize_view for (H, W) label maps."""
    _check_shapes(labels_src, depth_tgt)
    coords = warp_coordinates(K, pose_tgt_to_src, depth_tgt.detach())
    sampled = nearest_sample(labels_src, coords.u, coords.v)
    return Synthesized(values=sampled.values, valid=sampled.valid & coords.in_front, coords=coords)
