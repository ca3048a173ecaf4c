"""
Evaluation result models: depth metrics, trajectories and ATE summaries.
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.camera import PoseSE3


class DepthEvalResult(BaseModel):
    """
    Standard monocular depth metrics over the evaluated pixels.

    Attributes:
        abs_rel: mean |d - g| / g
        sq_rel: mean (d - g)^2 / g
        rmse: sqrt(mean (d - g)^2)
        rmse_log: sqrt(mean (ln d - ln g)^2)
        delta1, delta2, delta3: fraction with max(d/g, g/d) < 1.25^k
        n_pixels: number of evaluated pixels
        scale: median-scaling factor applied to the prediction (1 when off)
    """

    abs_rel: float = Field(..., ge=0.0)
    sq_rel: float = Field(..., ge=0.0)
    rmse: float = Field(..., ge=0.0)
    rmse_log: float = Field(..., ge=0.0)
    delta1: float = Field(..., ge=0.0, le=1.0)
    delta2: float = Field(..., ge=0.0, le=1.0)
    delta3: float = Field(..., ge=0.0, le=1.0)
    n_pixels: int = Field(..., ge=1)
    scale: float = 1.0

    @model_validator(mode="after")
    def validate_deltas(self) -> "DepthEvalResult":
        if not self.delta1 <= self.delta2 <= self.delta3:
            raise ValueError("delta thresholds must be non-decreasing")
        return self

    def as_row(self) -> dict:
        return {
            "abs_rel": self.abs_rel,
            "sq_rel": self.sq_rel,
            "rmse": self.rmse,
            "rmse_log": self.rmse_log,
            "a1": self.delta1,
            "a2": self.delta2,
            "a3": self.delta3,
        }


class Trajectory(BaseModel):
    """Ordered camera-to-world poses with optional timestamps."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    poses: List[PoseSE3] = Field(..., min_length=1)
    timestamps: Optional[List[float]] = None

    @model_validator(mode="after")
    def validate_timestamps(self) -> "Trajectory":
        if self.timestamps is not None and len(self.timestamps) != len(self.poses):
            raise ValueError("timestamps must match the number of poses")
        return self

    def __len__(self) -> int:
        return len(self.poses)

    def positions(self) -> np.ndarray:
        """(N, 3) camera centres in world coordinates."""
        return np.stack([pose.translation.detach().cpu().numpy() for pose in self.poses])

    def window(self, start: int, length: int) -> "Trajectory":
        stamps = None if self.timestamps is None else self.timestamps[start:start + length]
        return Trajectory(poses=self.poses[start:start + length], timestamps=stamps)


class AteSummary(BaseModel):
    """ATE statistics over all snippets of a sequence."""

    mean: float = Field(..., ge=0.0)
    std: float = Field(..., ge=0.0)
    snippet_length: int
    n_snippets: int = Field(..., ge=1)
    baseline: Optional[str] = None

    def __str__(self) -> str:
        return f"{self.mean:.3f} ± {self.std:.3f}"
