"""
SE(3) group operations and the 6-vector pose parametrization.

param6 = (omega, t): omega is an axis-angle rotation vector (Rodrigues),
t is the translation itself. exp6 is differentiable everywhere, including
omega = 0, so pose parameters can start from the identity.
"""

import torch

from src.exceptions import DomainError
from src.models.camera import DTYPE, ArrayLike, PoseSE3, as_tensor

# Below this squared angle the Rodrigues coefficients switch to their series.
_SMALL_ANGLE_SQ = 1e-12

# log6 refuses rotations this close to pi (axis becomes ill-conditioned).
LOG_ANGLE_LIMIT = torch.pi - 1e-6


def hat(omega: torch.Tensor) -> torch.Tensor:
    """Skew-symmetric matrix [omega]_x."""
    zero = torch.zeros((), dtype=omega.dtype)
    wx, wy, wz = omega[0], omega[1], omega[2]
    return torch.stack([
        torch.stack([zero, -wz, wy]),
        torch.stack([wz, zero, -wx]),
        torch.stack([-wy, wx, zero]),
    ])


def vee(matrix: torch.Tensor) -> torch.Tensor:
    """Inverse of hat for the skew part of a 3x3 matrix."""
    return torch.stack([
        matrix[2, 1] - matrix[1, 2],
        matrix[0, 2] - matrix[2, 0],
        matrix[1, 0] - matrix[0, 1],
    ]) / 2.0


def rodrigues(omega: torch.Tensor) -> torch.Tensor:
    """Rotation matrix exp([omega]_x)."""
    theta_sq = (omega * omega).sum()
    small = theta_sq < _SMALL_ANGLE_SQ
    # sqrt evaluated on a safe value so the unused branch never produces NaN gradients
    theta = torch.sqrt(torch.where(small, torch.ones_like(theta_sq), theta_sq))
    half = theta / 2.0
    a = torch.where(small, 1.0 - theta_sq / 6.0 + theta_sq * theta_sq / 120.0, torch.sin(theta) / theta)
    b = torch.where(
        small,
        0.5 - theta_sq / 24.0 + theta_sq * theta_sq / 720.0,
        2.0 * torch.sin(half) ** 2 / torch.where(small, torch.ones_like(theta_sq), theta_sq),
    )
    k = hat(omega)
    return torch.eye(3, dtype=omega.dtype) + a * k + b * (k @ k)


def exp6(param6: ArrayLike) -> PoseSE3:
    """
    Pose from its 6-vector (axis-angle rotation, translation).

    Gradients flow from the returned rotation/translation back to param6.
    """
    p = as_tensor(param6)
    if tuple(p.shape) != (6,):
        raise DomainError(f"param6 must have shape (6,), got {tuple(p.shape)}")
    return PoseSE3(rotation=rodrigues(p[:3]), translation=p[3:])


def log6(pose: PoseSE3) -> torch.Tensor:
    """
    6-vector of a pose; inverse of exp6 for rotation angles below pi.

    Raises:
        DomainError: rotation angle within 1e-6 of pi
    """
    r = pose.rotation
    w = vee(r)
    sin_theta = torch.linalg.norm(w)
    cos_theta = (torch.trace(r) - 1.0) / 2.0
    theta = torch.atan2(sin_theta, cos_theta)
    if theta.item() >= LOG_ANGLE_LIMIT:
        raise DomainError(f"log6 undefined near rotation angle pi (angle={theta.item():.9f})")
    if sin_theta.item() < 1e-8:
        omega = w * (1.0 + theta * theta / 6.0)
    else:
        omega = w * (theta / sin_theta)
    return torch.cat([omega, pose.translation])


def compose(first: PoseSE3, second: PoseSE3) -> PoseSE3:
    """first o second: apply `second`, then `first`."""
    return PoseSE3(
        rotation=first.rotation @ second.rotation,
        translation=first.rotation @ second.translation + first.translation,
    )


def inverse(pose: PoseSE3) -> PoseSE3:
    rt = pose.rotation.transpose(0, 1)
    return PoseSE3(rotation=rt, translation=-(rt @ pose.translation))


def relative_pose(camera_to_world_src: PoseSE3, camera_to_world_dst: PoseSE3) -> PoseSE3:
    """T_{src->dst}: maps src camera coordinates into dst camera coordinates."""
    return compose(inverse(camera_to_world_dst), camera_to_world_src)


def chain_adjacent(adjacent: list[PoseSE3], source: int, destination: int) -> PoseSE3:
    """
    T_{source->destination} from adjacent-pair poses.

    adjacent[k] is T_{k->k+1}. Moving forward composes them; moving backward
    composes their inverses.
    """
    pose = PoseSE3(rotation=torch.eye(3, dtype=DTYPE), translation=torch.zeros(3, dtype=DTYPE))
    if destination >= source:
        for k in range(source, destination):
            pose = compose(adjacent[k], pose)
    else:
        for k in range(source - 1, destination - 1, -1):
            pose = compose(inverse(adjacent[k]), pose)
    return pose


def rotation_angle(pose: PoseSE3) -> float:
    """Geodesic rotation angle of a pose (radians)."""
    r = pose.rotation.detach()
    sin_theta = torch.linalg.norm(vee(r))
    cos_theta = (torch.trace(r) - 1.0) / 2.0
    return float(torch.atan2(sin_theta, cos_theta))


def nearest_rotation(matrix: ArrayLike) -> torch.Tensor:
    """Closest proper rotation (Frobenius norm) to a 3x3 matrix."""
    m = as_tensor(matrix).reshape(3, 3)
    u, _, vh = torch.linalg.svd(m)
    d = torch.sign(torch.linalg.det(u @ vh))
    correction = torch.diag(torch.stack([torch.ones((), dtype=m.dtype), torch.ones((), dtype=m.dtype), d]))
    return u @ correction @ vh
