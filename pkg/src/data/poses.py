"""
Pose and intrinsics text files.

Pose files hold one camera-to-world pose per line as 12 whitespace-separated
numbers, the row-major 3x4 matrix [R|t]. Intrinsics files hold a single
line "fx fy cx cy".
"""

from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from pydantic import ValidationError

from src.exceptions import DomainError, RasterFormatError, TrajectoryError
from src.geometry.se3 import nearest_rotation
from src.models.camera import Intrinsics, PoseSE3
from src.models.evaluation import Trajectory

PathLike = Union[str, Path]

# Printed poses are rounded; rotations this close to orthonormal are re-projected.
REPROJECT_TOLERANCE = 1e-4


def _number(value: float) -> str:
    return format(float(value), ".17g")


def format_poses(poses: Sequence[PoseSE3]) -> str:
    lines = [" ".join(_number(v) for v in pose.matrix34().reshape(-1)) for pose in poses]
    return "\n".join(lines) + "\n"


def parse_poses(text: str, source: PathLike = "<text>") -> Trajectory:
    """
    Parse a pose file.

    Raises:
        TrajectoryError: empty file
        RasterFormatError: a line without 12 numbers
        DomainError: a rotation that is not orthonormal
    """
    poses: List[PoseSE3] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 12:
            raise RasterFormatError(f"{source}:{lineno}: expected 12 values, found {len(parts)}")
        try:
            values = np.array([float(p) for p in parts])
        except ValueError as e:
            raise RasterFormatError(f"{source}:{lineno}: {e}") from e
        matrix = values.reshape(3, 4)
        rotation = matrix[:, :3]
        if np.linalg.det(rotation) > 0 and np.abs(rotation.T @ rotation - np.eye(3)).max() < REPROJECT_TOLERANCE:
            rotation = nearest_rotation(rotation).numpy()
        try:
            poses.append(PoseSE3(rotation=rotation, translation=matrix[:, 3]))
        except ValidationError as e:
            raise DomainError(f"{source}:{lineno}: invalid pose ({e.errors()[0]['msg']})") from e
    if not poses:
        raise TrajectoryError(f"{source}: no poses")
    return Trajectory(poses=poses)


def read_poses(path: PathLike) -> Trajectory:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"pose file not found: {path}")
    return parse_poses(path.read_text(), path)


def read_intrinsics(path: PathLike) -> Intrinsics:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"intrinsics file not found: {path}")
    lines = [line for line in path.read_text().splitlines() if line.strip() and not line.startswith("#")]
    if len(lines) != 1:
        raise RasterFormatError(f"{path}: expected a single 'fx fy cx cy' line")
    try:
        return Intrinsics.from_text(lines[0])
    except (ValueError, ValidationError) as e:
        raise RasterFormatError(f"{path}: {e}") from e


def format_intrinsics(K: Intrinsics) -> str:
    return " ".join(_number(v) for v in (K.fx, K.fy, K.cx, K.cy)) + "\n"
