"""
Snippet input model: one target frame with its source frames and geometry.
"""

from typing import List, Optional

import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.camera import Intrinsics, PoseSE3


class SnippetInputs(BaseModel):
    """
    Everything total_loss needs for one target frame.

    Attributes:
        K: Shared intrinsics
        target_image: (3, H, W) I_t
        target_labels: (H, W) S_t
        target_depth: (H, W) D_t
        source_images: I_{t'} per source
        source_labels: S_{t'} per source
        source_depths: D_{t'} per source (needed by the 3D point loss only)
        poses: T_{t->t'} per source
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    K: Intrinsics
    target_image: torch.Tensor
    target_labels: torch.Tensor
    target_depth: torch.Tensor
    source_images: List[torch.Tensor] = Field(..., min_length=1)
    source_labels: List[torch.Tensor] = Field(..., min_length=1)
    source_depths: Optional[List[torch.Tensor]] = None
    poses: List[PoseSE3] = Field(..., min_length=1)

    @model_validator(mode="after")
    def validate_shapes(self) -> "SnippetInputs":
        size = tuple(self.target_depth.shape)
        if len(size) != 2:
            raise ValueError(f"target depth must be (H, W), got {size}")
        if tuple(self.target_image.shape) != (3, *size):
            raise ValueError(f"target image {tuple(self.target_image.shape)} does not match depth {size}")
        if tuple(self.target_labels.shape) != size:
            raise ValueError(f"target labels {tuple(self.target_labels.shape)} do not match depth {size}")

        n = len(self.source_images)
        if len(self.source_labels) != n or len(self.poses) != n:
            raise ValueError("source images, labels and poses must have the same length")
        if self.source_depths is not None and len(self.source_depths) != n:
            raise ValueError("source depths must match the number of sources")
        for image in self.source_images:
            if tuple(image.shape) != (3, *size):
                raise ValueError(f"source image {tuple(image.shape)} does not match target {size}")
        for labels in self.source_labels:
            if tuple(labels.shape) != size:
                raise ValueError(f"source labels {tuple(labels.shape)} do not match target {size}")
        return self

    @property
    def num_sources(self) -> int:
        return len(self.source_images)
