"""
Analytic ray casting against scene primitives.

Rays leave the camera centre through sub-pixel positions (u, v) with camera
direction ((u - cx)/fx, (v - cy)/fy, 1), so the ray parameter of a hit is
exactly its depth along the optical axis.
"""

from typing import NamedTuple

import numpy as np

from src.models.camera import Intrinsics, PoseSE3
from src.models.scene import Box, FrontoParallelPlane, GroundPlane, SceneSpec

# Hits closer than this along the ray are ignored.
MIN_HIT = 1e-9
_PARALLEL = 1e-12


class Rays(NamedTuple):
    origin: np.ndarray
    directions: np.ndarray


class RayHit(NamedTuple):
    depth: np.ndarray
    primitive: np.ndarray
    points: np.ndarray


def camera_rays(K: Intrinsics, camera_to_world: PoseSE3, u: np.ndarray, v: np.ndarray) -> Rays:
    """World-frame rays through pixel coordinates (u, v)."""
    rotation = camera_to_world.rotation.detach().cpu().numpy()
    origin = camera_to_world.translation.detach().cpu().numpy()
    dx = (np.asarray(u, dtype=np.float64) - K.cx) / K.fx
    dy = (np.asarray(v, dtype=np.float64) - K.cy) / K.fy
    dx, dy = np.broadcast_arrays(dx, dy)
    dz = np.ones_like(dx)
    directions = np.stack(
        [rotation[i, 0] * dx + rotation[i, 1] * dy + rotation[i, 2] * dz for i in range(3)],
        axis=-1,
    )
    return Rays(origin=origin, directions=directions)


def _axis_plane(origin: np.ndarray, directions: np.ndarray, axis: int, level: float) -> np.ndarray:
    component = directions[..., axis]
    facing = np.abs(component) > _PARALLEL
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (level - origin[axis]) / np.where(facing, component, 1.0)
    return np.where(facing & (s > MIN_HIT), s, np.inf)


def _box(origin: np.ndarray, directions: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    near = np.full(directions.shape[:-1], -np.inf)
    far = np.full(directions.shape[:-1], np.inf)
    for axis in range(3):
        component = directions[..., axis]
        moving = np.abs(component) > _PARALLEL
        safe = np.where(moving, component, 1.0)
        t1 = (lo[axis] - origin[axis]) / safe
        t2 = (hi[axis] - origin[axis]) / safe
        inside_slab = lo[axis] <= origin[axis] <= hi[axis]
        near = np.where(moving, np.maximum(near, np.minimum(t1, t2)), near if inside_slab else np.inf)
        far = np.where(moving, np.minimum(far, np.maximum(t1, t2)), far if inside_slab else -np.inf)
    hit = (near <= far) & (near > MIN_HIT)
    return np.where(hit, near, np.inf)


def intersect(primitive, frame: int, rays: Rays) -> np.ndarray:
    """Ray parameter of the first hit with one primitive at a frame (inf on a miss)."""
    offset = np.asarray(primitive.velocity, dtype=np.float64) * frame
    if isinstance(primitive, FrontoParallelPlane):
        return _axis_plane(rays.origin, rays.directions, 2, primitive.depth + offset[2])
    if isinstance(primitive, GroundPlane):
        return _axis_plane(rays.origin, rays.directions, 1, primitive.height + offset[1])
    if isinstance(primitive, Box):
        lo = np.asarray(primitive.minimum, dtype=np.float64) + offset
        hi = np.asarray(primitive.maximum, dtype=np.float64) + offset
        return _box(rays.origin, rays.directions, lo, hi)
    raise TypeError(f"unknown primitive {type(primitive).__name__}")


def cast(spec: SceneSpec, frame: int, u: np.ndarray, v: np.ndarray) -> RayHit:
    """
    Nearest intersection of every ray with the scene.

    Returns:
        RayHit with depth (inf on a miss), primitive index (-1 on a miss) and
        world hit points
    """
    rays = camera_rays(spec.intrinsics, spec.camera_pose(frame), u, v)
    depth = np.full(rays.directions.shape[:-1], np.inf)
    primitive = np.full(rays.directions.shape[:-1], -1, dtype=np.int64)
    for index, candidate in enumerate(spec.primitives):
        s = intersect(candidate, frame, rays)
        closer = s < depth
        depth = np.where(closer, s, depth)
        primitive = np.where(closer, index, primitive)
    finite = np.isfinite(depth)
    points = rays.origin + np.where(finite, depth, 0.0)[..., None] * rays.directions
    return RayHit(depth=depth, primitive=primitive, points=points)
