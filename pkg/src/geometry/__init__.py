"""
Camera geometry package: pinhole model and SE(3) transforms.
"""

from src.geometry.camera import (
    Projection,
    backproject,
    pixel_grid,
    project,
    project_pixel,
    project_raster,
    transform,
)
from src.geometry.se3 import (
    chain_adjacent,
    compose,
    exp6,
    inverse,
    log6,
    relative_pose,
    rodrigues,
    rotation_angle,
)

__all__ = [
    "Projection",
    "backproject",
    "pixel_grid",
    "project",
    "project_pixel",
    "project_raster",
    "transform",
    "chain_adjacent",
    "compose",
    "exp6",
    "inverse",
    "log6",
    "relative_pose",
    "rodrigues",
    "rotation_angle",
]
