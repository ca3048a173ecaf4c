"""
Loss package: every training-signal term and their weighted total.
"""

from src.losses.photometric import (
    ImageLossResult,
    automask,
    fill_invalid,
    masked_image_loss,
    min_reprojection_loss,
    recon_error,
    recon_loss,
    smoothness_loss,
    ssim,
)
from src.losses.point3d import PointLossResult, point_error, point_error_map, point_loss_3d
from src.losses.semantic import (
    RoadOrderingResult,
    SemanticLossResult,
    road_mask,
    road_ordering_loss,
    semantic_loss,
    semantic_mask,
)
from src.losses.total import total_loss

__all__ = [
    "ImageLossResult",
    "automask",
    "fill_invalid",
    "masked_image_loss",
    "min_reprojection_loss",
    "recon_error",
    "recon_loss",
    "smoothness_loss",
    "ssim",
    "PointLossResult",
    "point_error",
    "point_error_map",
    "point_loss_3d",
    "RoadOrderingResult",
    "SemanticLossResult",
    "road_mask",
    "road_ordering_loss",
    "semantic_loss",
    "semantic_mask",
    "total_loss",
]
