"""
Synthetic scene description models.

A scene is a list of textured primitives seen by a moving pinhole camera.
World coordinates follow the camera convention of frame 0 (x right, y down,
z forward). Every primitive may translate by a constant velocity per frame;
its texture moves with it.
"""

from typing import Annotated, List, Literal, Tuple, Union

import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.camera import Intrinsics, PoseSE3
from src.models.losses import NUM_CLASSES

Vector3 = Tuple[float, float, float]


class Texture(BaseModel):
    """
    Smooth procedural texture: base + sum of low-frequency sinusoids.

    Wave directions, frequencies and phases are drawn from the scene seed and
    the primitive index, per channel. The amplitudes sum to `amplitude`, so
    values stay inside [base - amplitude, base + amplitude] within [0, 1].

    Attributes:
        base: Mean intensity
        amplitude: Total wave amplitude
        n_waves: Sinusoids per channel
        frequency: Largest angular frequency (radians per meter)
    """

    model_config = ConfigDict(frozen=True)

    base: float = Field(default=0.5, ge=0.0, le=1.0)
    amplitude: float = Field(default=0.3, ge=0.0, le=0.5)
    n_waves: int = Field(default=3, ge=1, le=16)
    frequency: float = Field(default=1.5, gt=0.0, le=20.0)

    @model_validator(mode="after")
    def validate_range(self) -> "Texture":
        if self.base - self.amplitude < 0.0 or self.base + self.amplitude > 1.0:
            raise ValueError("texture values must stay inside [0, 1]")
        return self


class _Primitive(BaseModel):
    model_config = ConfigDict(frozen=True)

    class_id: int = Field(..., ge=0, lt=NUM_CLASSES)
    velocity: Vector3 = (0.0, 0.0, 0.0)
    texture: Texture = Field(default_factory=Texture)

    @property
    def is_static(self) -> bool:
        return all(component == 0.0 for component in self.velocity)


class FrontoParallelPlane(_Primitive):
    """Plane z = depth (world frame), facing the frame-0 camera."""

    kind: Literal["plane"] = "plane"
    depth: float = Field(..., gt=0.0)


class GroundPlane(_Primitive):
    """Horizontal plane y = height below the camera (y grows downward)."""

    kind: Literal["ground"] = "ground"
    height: float = Field(..., gt=0.0)


class Box(_Primitive):
    """Axis-aligned box between `minimum` and `maximum` corners."""

    kind: Literal["box"] = "box"
    minimum: Vector3
    maximum: Vector3

    @model_validator(mode="after")
    def validate_corners(self) -> "Box":
        if any(lo >= hi for lo, hi in zip(self.minimum, self.maximum)):
            raise ValueError("box minimum must be strictly below maximum on every axis")
        return self


Primitive = Annotated[Union[FrontoParallelPlane, GroundPlane, Box], Field(discriminator="kind")]


class SceneSpec(BaseModel):
    """
    Scene definition rendered by src.scene.

    Attributes:
        intrinsics: Camera intrinsics shared by all frames
        width, height: Image size (pixels, at least 8 x 8)
        camera_poses: Camera-to-world param6 per frame
        primitives: Textured primitives; the nearest intersection wins
        depth_cap: Rendered depths must stay below this (meters)
        seed: Texture seed

    Example:
        >>> spec = SceneSpec(
        ...     intrinsics=Intrinsics(fx=64, fy=64, cx=31.5, cy=15.5),
        ...     width=64, height=32,
        ...     camera_poses=[[0, 0, 0, 0, 0, 0], [0, 0, 0, 0.5, 0, 0]],
        ...     primitives=[FrontoParallelPlane(depth=8.0, class_id=2)],
        ... )
    """

    intrinsics: Intrinsics
    width: int = Field(..., ge=8)
    height: int = Field(..., ge=8)
    camera_poses: List[Tuple[float, float, float, float, float, float]] = Field(..., min_length=1)
    primitives: List[Primitive] = Field(..., min_length=1)
    depth_cap: float = Field(default=80.0, gt=0.1)
    seed: int = Field(default=0, ge=0)

    @property
    def num_frames(self) -> int:
        return len(self.camera_poses)

    def camera_pose(self, frame: int) -> PoseSE3:
        """Camera-to-world pose of a frame."""
        from src.geometry.se3 import exp6

        if not 0 <= frame < self.num_frames:
            raise IndexError(f"frame {frame} outside [0, {self.num_frames - 1}]")
        return exp6(self.camera_poses[frame])

    @property
    def is_static(self) -> bool:
        return all(p.is_static for p in self.primitives)


class RenderedFrame(BaseModel):
    """
    One rendered frame.

    Attributes:
        index: Frame index
        image: (3, H, W) intensities in [0, 1]
        depth: (H, W) ray depth along the optical axis
        labels: (H, W) class ids
        valid: (H, W) always True
        pose: Camera-to-world pose
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    index: int
    image: torch.Tensor
    depth: torch.Tensor
    labels: torch.Tensor
    valid: torch.Tensor
    pose: PoseSE3
