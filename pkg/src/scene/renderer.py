"""
Synthetic scene renderer and ground-truth correspondence oracle.
"""

from typing import List, NamedTuple

import numpy as np
import torch

from src.exceptions import SceneCoverageError
from src.geometry.camera import pixel_grid
from src.models.camera import DTYPE
from src.models.scene import RenderedFrame, SceneSpec
from src.scene import texture
from src.scene.raycast import RayHit, cast
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

MIN_RENDER_DEPTH = 0.1

# Relative depth margin before a reprojected point counts as hidden.
OCCLUSION_MARGIN = 1e-6


def _waves(spec: SceneSpec) -> List[texture.WaveSet]:
    return [texture.draw_waves(p.texture, spec.seed, i) for i, p in enumerate(spec.primitives)]


def shade(spec: SceneSpec, frame: int, hit: RayHit) -> np.ndarray:
    """(3, ...) colours of hit points; each primitive is textured in its own moving frame."""
    colour = np.zeros((3,) + hit.depth.shape)
    for index, (primitive, waves) in enumerate(zip(spec.primitives, _waves(spec))):
        selected = hit.primitive == index
        if not selected.any():
            continue
        local = hit.points[selected] - np.asarray(primitive.velocity) * frame
        colour[:, selected] = texture.evaluate(primitive.texture, waves, local)
    return colour


def render(spec: SceneSpec, frame: int) -> RenderedFrame:
    """
    Ray-cast one frame.

    Raises:
        SceneCoverageError: a ray misses every primitive or a depth falls
            outside (0.1, depth_cap)
    """
    u, v = (g.numpy() for g in pixel_grid(spec.height, spec.width))
    hit = cast(spec, frame, u, v)

    missed = int((hit.primitive < 0).sum())
    if missed:
        raise SceneCoverageError(f"frame {frame}: {missed} rays miss every primitive; add a background plane")
    finite = hit.depth[np.isfinite(hit.depth)]
    if finite.min() <= MIN_RENDER_DEPTH or finite.max() >= spec.depth_cap:
        raise SceneCoverageError(
            f"frame {frame}: depths span [{finite.min():.4g}, {finite.max():.4g}], "
            f"outside ({MIN_RENDER_DEPTH}, {spec.depth_cap})"
        )

    labels = np.asarray([p.class_id for p in spec.primitives])[hit.primitive]
    image = shade(spec, frame, hit)
    logger.debug(f"Rendered frame {frame}: depth in [{finite.min():.3f}, {finite.max():.3f}]")
    return RenderedFrame(
        index=frame,
        image=torch.from_numpy(image).to(DTYPE),
        depth=torch.from_numpy(hit.depth).to(DTYPE),
        labels=torch.from_numpy(labels).long(),
        valid=torch.ones(hit.depth.shape, dtype=torch.bool),
        pose=spec.camera_pose(frame),
    )


def render_all(spec: SceneSpec) -> List[RenderedFrame]:
    frames = [render(spec, frame) for frame in range(spec.num_frames)]
    logger.info(f"Rendered {len(frames)} frames of {spec.width}x{spec.height}")
    return frames


class Correspondence(NamedTuple):
    """
    Ground-truth correspondence of frame-i pixels in frame j.

    u, v: true reprojection (object motion included)
    in_view: true reprojection in front of camera j and inside the frame
    occluded: the true point is hidden by something nearer in frame j
    static_u, static_v: reprojection with camera motion only (what a static
        warp with exact depth and pose produces)
    static_in_view: static reprojection in front of camera j and inside the frame
    consistent: class seen in frame j at the nearest pixel of the static
        reprojection equals the frame-i class
    """

    u: np.ndarray
    v: np.ndarray
    in_view: np.ndarray
    occluded: np.ndarray
    static_u: np.ndarray
    static_v: np.ndarray
    static_in_view: np.ndarray
    consistent: np.ndarray


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _project(spec: SceneSpec, frame: int, points: np.ndarray):
    pose = spec.camera_pose(frame)
    rotation = pose.rotation.detach().numpy()
    camera = (points - pose.translation.detach().numpy()) @ rotation
    z = camera[..., 2]
    in_front = z > 0
    z_safe = np.where(in_front, z, 1.0)
    K = spec.intrinsics
    u = K.fx * camera[..., 0] / z_safe + K.cx
    v = K.fy * camera[..., 1] / z_safe + K.cy
    inside = in_front & (u >= 0) & (u <= spec.width - 1) & (v >= 0) & (v <= spec.height - 1)
    return u, v, z, inside


def ground_truth_correspondence(spec: SceneSpec, i: int, j: int, u, v) -> Correspondence:
    """
    Exact correspondence of pixels (u, v) of frame i in frame j.

    Args:
        spec: Scene
        i, j: Frame indices
        u, v: Pixel coordinates in frame i (scalars or arrays)
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    hit = cast(spec, i, u, v)
    if bool((hit.primitive < 0).any()):
        raise SceneCoverageError(f"frame {i}: correspondence requested for a pixel that sees nothing")

    velocities = np.asarray([p.velocity for p in spec.primitives], dtype=np.float64)[hit.primitive]
    class_ids = np.asarray([p.class_id for p in spec.primitives])
    moved = hit.points + velocities * (j - i)

    true_u, true_v, true_z, in_view = _project(spec, j, moved)
    seen = cast(spec, j, np.where(in_view, true_u, 0.0), np.where(in_view, true_v, 0.0))
    margin = OCCLUSION_MARGIN * np.maximum(1.0, np.abs(true_z))
    occluded = in_view & (seen.depth < true_z - margin)

    static_u, static_v, _, static_in_view = _project(spec, j, hit.points)
    col = np.clip(_round_half_away(np.where(static_in_view, static_u, 0.0)), 0, spec.width - 1)
    row = np.clip(_round_half_away(np.where(static_in_view, static_v, 0.0)), 0, spec.height - 1)
    seen_static = cast(spec, j, col, row)
    consistent = class_ids[seen_static.primitive] == class_ids[hit.primitive]

    return Correspondence(
        u=true_u,
        v=true_v,
        in_view=in_view,
        occluded=occluded,
        static_u=static_u,
        static_v=static_v,
        static_in_view=static_in_view,
        consistent=consistent,
    )


def inconsistency_map(spec: SceneSpec, i: int, j: int):
    """
    (inconsistent, defined) rasters of frame i against frame j.

    `inconsistent` marks pixels whose static reprojection lands on another
    class in frame j; `defined` marks pixels whose static reprojection is in view.
    """
    u, v = (g.numpy() for g in pixel_grid(spec.height, spec.width))
    corr = ground_truth_correspondence(spec, i, j, u, v)
    return (~corr.consistent) & corr.static_in_view, corr.static_in_view
