"""
Raster samplers for view synthesis.

A sample is valid when its coordinate lies inside [0, W-1] x [0, H-1], i.e.
every neighbour of its interpolation cell exists. Values of invalid samples
are taken from the clamped coordinate (border replication) so they stay
finite; they never enter a loss because callers carry the validity mask.
"""

from typing import NamedTuple

import torch

from src.models.camera import DTYPE


class Sampled(NamedTuple):
    values: torch.Tensor
    valid: torch.Tensor


# Projection round-off below this (pixels) is snapped onto the lattice.
SNAP_TOLERANCE = 1e-9


def snap_to_lattice(coord: torch.Tensor) -> torch.Tensor:
    """Move coordinates within SNAP_TOLERANCE of an integer onto it; the gradient is unchanged."""
    rounded = torch.round(coord.detach())
    near = (coord.detach() - rounded).abs() < SNAP_TOLERANCE
    return torch.where(near, coord + (rounded - coord).detach(), coord)


def in_bounds(u: torch.Tensor, v: torch.Tensor, height: int, width: int) -> torch.Tensor:
    return (u >= 0) & (u <= width - 1) & (v >= 0) & (v <= height - 1)


def _cell(coord: torch.Tensor, size: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Lower cell corner and fractional offset; right-continuous, last line uses the left cell."""
    clamped = coord.clamp(0, size - 1)
    base = torch.floor(clamped.detach()).clamp(max=max(size - 2, 0))
    return base.long(), clamped - base


def bilinear_sample(src: torch.Tensor, u: torch.Tensor, v: torch.Tensor) -> Sampled:
    """
    Bilinear interpolation of a (C, H, W) or (H, W) raster at real coordinates.

    Differentiable with respect to `src` and to the coordinates (inside the
    frame and away from integer lattice lines).

    Args:
        src: Source raster
        u, v: Column/row coordinates, same shape

    Returns:
        Sampled values (shape (C, *u.shape) or u.shape) and validity
    """
    height, width = src.shape[-2], src.shape[-1]
    u = snap_to_lattice(u)
    v = snap_to_lattice(v)
    x0, fx = _cell(u, width)
    y0, fy = _cell(v, height)
    x1 = (x0 + 1).clamp(max=width - 1)
    y1 = (y0 + 1).clamp(max=height - 1)

    top_left = src[..., y0, x0]
    top_right = src[..., y0, x1]
    bottom_left = src[..., y1, x0]
    bottom_right = src[..., y1, x1]

    values = (
        (1 - fx) * (1 - fy) * top_left
        + fx * (1 - fy) * top_right
        + (1 - fx) * fy * bottom_left
        + fx * fy * bottom_right
    )
    return Sampled(values=values, valid=in_bounds(u, v, height, width))


def round_half_away(coord: torch.Tensor) -> torch.Tensor:
    """Round to the nearest integer, ties away from zero."""
    return torch.sign(coord) * torch.floor(coord.abs() + 0.5)


def nearest_sample(src: torch.Tensor, u: torch.Tensor, v: torch.Tensor) -> Sampled:
    """
    Nearest-neighbour lookup for label rasters; never blends class ids.

    Validity follows bilinear_sample so image and label warps share one valid set.
    """
    height, width = src.shape[-2], src.shape[-1]
    u = snap_to_lattice(u.detach())
    v = snap_to_lattice(v.detach())
    cols = round_half_away(u).clamp(0, width - 1).long()
    rows = round_half_away(v).clamp(0, height - 1).long()
    return Sampled(values=src[..., rows, cols], valid=in_bounds(u, v, height, width))


def sample_depth(depth: torch.Tensor, u: torch.Tensor, v: torch.Tensor) -> Sampled:
    """Bilinear lookup in an (H, W) depth raster."""
    if depth.dim() != 2:
        raise ValueError(f"depth raster must be 2-D, got shape {tuple(depth.shape)}")
    return bilinear_sample(depth.to(DTYPE), u, v)
