"""
Pinhole projection, backprojection and rigid transforms of points.

Pixel convention: u is the column (grows rightward), v is the row (grows
downward), pixel centres sit on integer coordinates. All functions broadcast
over leading dimensions, so the same code handles a single pixel and a whole
raster.
"""

from typing import NamedTuple

import torch

from src.exceptions import DomainError
from src.models.camera import DTYPE, Intrinsics, PoseSE3


class Projection(NamedTuple):
    """Real-valued pixel coordinates plus the in-front-of-camera flag."""

    u: torch.Tensor
    v: torch.Tensor
    in_front: torch.Tensor


def pixel_grid(height: int, width: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Integer pixel-centre coordinates (u, v), each of shape (height, width)."""
    v, u = torch.meshgrid(
        torch.arange(height, dtype=DTYPE),
        torch.arange(width, dtype=DTYPE),
        indexing="ij",
    )
    return u, v


def backproject(K: Intrinsics, u: torch.Tensor, v: torch.Tensor, depth: torch.Tensor) -> torch.Tensor:
    """
    3D camera-frame point ((u - cx)/fx * d, (v - cy)/fy * d, d).

    Args:
        K: Intrinsics
        u, v: Pixel coordinates (any broadcastable shape)
        depth: Depth along the optical axis (meters)

    Returns:
        Points of shape (..., 3)

    Raises:
        DomainError: Any depth is not strictly positive
    """
    u = torch.as_tensor(u, dtype=DTYPE)
    v = torch.as_tensor(v, dtype=DTYPE)
    depth = torch.as_tensor(depth, dtype=DTYPE)
    if bool((depth.detach() <= 0).any()):
        raise DomainError("backproject requires strictly positive depth")
    x = (u - K.cx) / K.fx * depth
    y = (v - K.cy) / K.fy * depth
    x, y, z = torch.broadcast_tensors(x, y, depth)
    return torch.stack([x, y, z], dim=-1)


def project(K: Intrinsics, points: torch.Tensor) -> Projection:
    """
    Pixel coordinates (fx x/z + cx, fy y/z + cy).

    Points with z <= 0 are flagged in `in_front` and get finite placeholder
    coordinates (computed with z = 1); callers exclude them via the flag.
    """
    points = torch.as_tensor(points, dtype=DTYPE)
    z = points[..., 2]
    in_front = z > 0
    z_safe = torch.where(in_front, z, torch.ones_like(z))
    u = K.fx * points[..., 0] / z_safe + K.cx
    v = K.fy * points[..., 1] / z_safe + K.cy
    return Projection(u=u, v=v, in_front=in_front)


def transform(pose: PoseSE3, points: torch.Tensor) -> torch.Tensor:
    """R P + t for points of shape (..., 3)."""
    points = torch.as_tensor(points, dtype=DTYPE)
    return points @ pose.rotation.transpose(0, 1) + pose.translation


def project_pixel(
    K: Intrinsics,
    pose: PoseSE3,
    depth: torch.Tensor,
    u: torch.Tensor,
    v: torch.Tensor,
) -> Projection:
    """
    Corresponding sub-pixel location p' ~ K T D(p) K^-1 p.

    Args:
        K: Intrinsics shared by both views
        pose: T_{t->t'} taking target-camera points into the other camera
        depth: Depth at (u, v) in the target view
        u, v: Target pixel coordinates

    Returns:
        Projection in the other view; `in_front` is False for points that end
        up behind that camera.
    """
    return project(K, transform(pose, backproject(K, u, v, depth)))


def project_raster(K: Intrinsics, pose: PoseSE3, depth: torch.Tensor) -> Projection:
    """project_pixel over every pixel centre of an (H, W) depth raster."""
    u, v = pixel_grid(*depth.shape)
    return project_pixel(K, pose, depth, u, v)
