"""
Ready-made scenes used by the command line, the selftest and the tests.
"""

from typing import List, Sequence

from src.models.camera import Intrinsics
from src.models.scene import Box, FrontoParallelPlane, GroundPlane, SceneSpec, Texture

# Class ids of the shipped class table.
ROAD = 0
BUILDING = 2
CAR = 13


def lateral_poses(n_frames: int, step: float, centre: bool = False) -> List[List[float]]:
    """Camera-to-world param6 for a camera sliding along +x by `step` per frame."""
    offset = (n_frames - 1) / 2.0 if centre else 0.0
    return [[0.0, 0.0, 0.0, (k - offset) * step, 0.0, 0.0] for k in range(n_frames)]


def dyadic_plane_scene(n_frames: int = 2, step: float = 0.5, depth: float = 8.0, seed: int = 0) -> SceneSpec:
    """
    Fronto-parallel plane seen by a 64 x 32 camera whose warps are exact.

    With fx = 64, depth 8 and step 0.5 every pixel moves by exactly 4 columns
    per frame, and all intermediate values are dyadic rationals.
    """
    return SceneSpec(
        intrinsics=Intrinsics(fx=64.0, fy=64.0, cx=31.5, cy=15.5),
        width=64,
        height=32,
        camera_poses=lateral_poses(n_frames, step, centre=n_frames > 2),
        primitives=[FrontoParallelPlane(depth=depth, class_id=BUILDING)],
        seed=seed,
    )


def street_scene(
    width: int = 128,
    height: int = 64,
    n_frames: int = 2,
    step: float = 0.5,
    plane_depth: float = 20.0,
    ground_height: float = 1.5,
    seed: int = 0,
) -> SceneSpec:
    """Ground plane (road) in front of a fronto-parallel facade, lateral motion."""
    focal = float(width) / 2.0
    return SceneSpec(
        intrinsics=Intrinsics(fx=focal, fy=focal, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0),
        width=width,
        height=height,
        camera_poses=lateral_poses(n_frames, step, centre=n_frames > 2),
        primitives=[
            FrontoParallelPlane(depth=plane_depth, class_id=BUILDING),
            GroundPlane(height=ground_height, class_id=ROAD, texture=Texture(frequency=2.0)),
        ],
        seed=seed,
    )


def moving_box_scene(
    width: int = 128,
    height: int = 64,
    n_frames: int = 3,
    step: float = 0.5,
    box_velocity: Sequence[float] = (0.6, 0.0, 0.0),
    seed: int = 0,
) -> SceneSpec:
    """street_scene plus a car-like box driving across the view."""
    spec = street_scene(width, height, n_frames, step, seed=seed)
    box = Box(
        minimum=(-2.0, 0.0, 8.0),
        maximum=(0.0, 1.5, 10.0),
        class_id=CAR,
        velocity=tuple(box_velocity),
        texture=Texture(base=0.4, amplitude=0.3, frequency=3.0),
    )
    return spec.model_copy(update={"primitives": [*spec.primitives, box]})
