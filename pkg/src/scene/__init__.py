"""
Synthetic scene package: analytic ray-cast renderer and correspondence oracle.
"""

from src.scene.presets import dyadic_plane_scene, moving_box_scene, street_scene
from src.scene.raycast import RayHit, camera_rays, cast
from src.scene.renderer import (
    Correspondence,
    ground_truth_correspondence,
    inconsistency_map,
    render,
    render_all,
)

__all__ = [
    "dyadic_plane_scene",
    "moving_box_scene",
    "street_scene",
    "RayHit",
    "camera_rays",
    "cast",
    "Correspondence",
    "ground_truth_correspondence",
    "inconsistency_map",
    "render",
    "render_all",
]
