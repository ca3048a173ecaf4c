"""
Camera data models: pinhole intrinsics and rigid SE(3) poses.

Rasters and geometry are torch float64 tensors throughout the library so that
every loss is differentiable and reproducible to machine precision.
"""

from typing import Sequence, Union

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DTYPE = torch.float64

ORTHONORMAL_TOLERANCE = 1e-9

ArrayLike = Union[torch.Tensor, np.ndarray, Sequence[float], Sequence[Sequence[float]]]


def as_tensor(value: ArrayLike) -> torch.Tensor:
    """Convert arrays and nested sequences to a float64 tensor (no copy for tensors)."""
    if isinstance(value, torch.Tensor):
        return value if value.dtype == DTYPE else value.to(DTYPE)
    return torch.as_tensor(np.asarray(value, dtype=np.float64), dtype=DTYPE)


class Intrinsics(BaseModel):
    """
    Pinhole camera intrinsics (zero skew, fx and fy independent).

    Attributes:
        fx: Horizontal focal length (pixels)
        fy: Vertical focal length (pixels)
        cx: Principal point column (pixels)
        cy: Principal point row (pixels)

    Example:
        >>> K = Intrinsics(fx=100.0, fy=100.0, cx=63.5, cy=31.5)
        >>> K.matrix()[0, 2]
        63.5
    """

    model_config = ConfigDict(frozen=True)

    fx: float = Field(..., gt=0.0, allow_inf_nan=False, description="Focal length u (px)")
    fy: float = Field(..., gt=0.0, allow_inf_nan=False, description="Focal length v (px)")
    cx: float = Field(..., allow_inf_nan=False, description="Principal point u (px)")
    cy: float = Field(..., allow_inf_nan=False, description="Principal point v (px)")

    def matrix(self) -> np.ndarray:
        """3x3 calibration matrix K."""
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])

    def to_text(self) -> str:
        """Single-line "fx fy cx cy" representation."""
        return f"{self.fx!r} {self.fy!r} {self.cx!r} {self.cy!r}"

    @classmethod
    def from_text(cls, text: str) -> "Intrinsics":
        """Parse the single-line "fx fy cx cy" format."""
        parts = text.split()
        if len(parts) != 4:
            raise ValueError(f"Intrinsics line needs 4 values, got {len(parts)}")
        fx, fy, cx, cy = (float(p) for p in parts)
        return cls(fx=fx, fy=fy, cx=cx, cy=cy)

    def __str__(self) -> str:
        return f"K(fx={self.fx}, fy={self.fy}, cx={self.cx}, cy={self.cy})"


class PoseSE3(BaseModel):
    """
    Rigid transform P -> R P + t.

    The relative pose between frames t and t' is written T_{t->t'}: it maps
    camera-t coordinates into camera-t' coordinates. Trajectories store
    camera-to-world poses.

    Attributes:
        rotation: 3x3 orthonormal matrix with determinant +1
        translation: 3-vector (meters)
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rotation: torch.Tensor
    translation: torch.Tensor

    @field_validator("rotation", "translation", mode="before")
    @classmethod
    def convert_to_tensor(cls, v: ArrayLike) -> torch.Tensor:
        return as_tensor(v)

    @model_validator(mode="after")
    def validate_rigid(self) -> "PoseSE3":
        """Ensure shapes and R^T R = I, det R = 1 within tolerance."""
        if tuple(self.rotation.shape) != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {tuple(self.rotation.shape)}")
        if tuple(self.translation.shape) != (3,):
            raise ValueError(f"translation must be a 3-vector, got {tuple(self.translation.shape)}")
        r = self.rotation.detach()
        if not bool(torch.isfinite(r).all()) or not bool(torch.isfinite(self.translation.detach()).all()):
            raise ValueError("pose contains non-finite values")
        gram_error = (r.T @ r - torch.eye(3, dtype=DTYPE)).abs().max().item()
        det_error = abs(torch.linalg.det(r).item() - 1.0)
        if gram_error > ORTHONORMAL_TOLERANCE or det_error > ORTHONORMAL_TOLERANCE:
            raise ValueError(
                f"rotation is not orthonormal (|R^T R - I| = {gram_error:.2e}, "
                f"|det R - 1| = {det_error:.2e})"
            )
        return self

    @classmethod
    def identity(cls) -> "PoseSE3":
        return cls(rotation=torch.eye(3, dtype=DTYPE), translation=torch.zeros(3, dtype=DTYPE))

    @classmethod
    def from_translation(cls, x: float, y: float, z: float) -> "PoseSE3":
        return cls(rotation=torch.eye(3, dtype=DTYPE), translation=[x, y, z])

    @classmethod
    def from_matrix34(cls, values: ArrayLike) -> "PoseSE3":
        """Build from a row-major 3x4 [R|t] (12 values or a 3x4 array)."""
        m = as_tensor(values).reshape(3, 4)
        return cls(rotation=m[:, :3].clone(), translation=m[:, 3].clone())

    @property
    def param6(self) -> torch.Tensor:
        """Axis-angle rotation followed by translation."""
        from src.geometry.se3 import log6
        return log6(self)

    def matrix34(self) -> np.ndarray:
        """Row-major 3x4 [R|t] as numpy."""
        return np.concatenate(
            [self.rotation.detach().cpu().numpy(), self.translation.detach().cpu().numpy()[:, None]],
            axis=1,
        )

    def matrix44(self) -> np.ndarray:
        """Homogeneous 4x4 matrix as numpy."""
        m = np.eye(4)
        m[:3, :] = self.matrix34()
        return m

    def detached(self) -> "PoseSE3":
        return PoseSE3(rotation=self.rotation.detach(), translation=self.translation.detach())

    def __str__(self) -> str:
        t = self.translation.detach().tolist()
        return f"PoseSE3(t=({t[0]:.4f}, {t[1]:.4f}, {t[2]:.4f}))"
