"""
Snippet-level Absolute Trajectory Error.

Both trajectories are re-anchored so their first pose is the identity; the
predicted positions are then scaled by the least-squares factor
s* = sum <p_i, g_i> / sum |p_i|^2 and the RMSE of the position errors over
the frames after the anchor is reported. No rotation alignment is done.
"""

from typing import List, Sequence, Union

import numpy as np

from src.exceptions import TrajectoryError
from src.geometry.se3 import compose, inverse
from src.models.camera import PoseSE3
from src.models.evaluation import AteSummary, Trajectory
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

TrajectoryLike = Union[Trajectory, Sequence[PoseSE3]]

SNIPPET_LENGTHS = (3, 5)


def _poses(trajectory: TrajectoryLike) -> List[PoseSE3]:
    poses = list(trajectory.poses if isinstance(trajectory, Trajectory) else trajectory)
    if not poses:
        raise TrajectoryError("trajectory is empty")
    return poses


def anchored_positions(trajectory: TrajectoryLike) -> np.ndarray:
    """(N, 3) positions after moving the first pose to the identity."""
    poses = _poses(trajectory)
    first_inv = inverse(poses[0].detached())
    return np.stack([
        compose(first_inv, pose.detached()).translation.cpu().numpy() for pose in poses
    ])


def scale_alignment(pred_xyz: np.ndarray, gt_xyz: np.ndarray) -> float:
    """Least-squares scale s* mapping predicted onto ground-truth positions (0 for a null prediction)."""
    denominator = float(np.sum(pred_xyz ** 2))
    if denominator == 0.0:
        return 0.0
    return float(np.sum(gt_xyz * pred_xyz)) / denominator


def ate_snippet(pred: TrajectoryLike, gt: TrajectoryLike) -> float:
    """
    Scale-aligned position RMSE of one snippet.

    Raises:
        TrajectoryError: empty trajectories or length mismatch
    """
    pred_xyz = anchored_positions(pred)
    gt_xyz = anchored_positions(gt)
    if len(pred_xyz) != len(gt_xyz):
        raise TrajectoryError(f"snippet lengths differ: {len(pred_xyz)} vs {len(gt_xyz)}")
    if len(pred_xyz) < 2:
        return 0.0

    scale = scale_alignment(pred_xyz, gt_xyz)
    alignment_error = scale * pred_xyz[1:] - gt_xyz[1:]
    return float(np.sqrt(np.mean(np.sum(alignment_error ** 2, axis=1))))


def _summary(errors: List[float], snippet_len: int, baseline=None) -> AteSummary:
    values = np.asarray(errors)
    return AteSummary(
        mean=float(values.mean()),
        std=float(values.std()),
        snippet_length=snippet_len,
        n_snippets=len(errors),
        baseline=baseline,
    )


def _check_sequence(pred_poses: List[PoseSE3], gt_poses: List[PoseSE3], snippet_len: int) -> None:
    if len(pred_poses) != len(gt_poses):
        raise TrajectoryError(f"sequence lengths differ: {len(pred_poses)} vs {len(gt_poses)}")
    if snippet_len < 2:
        raise ValueError(f"snippet length must be at least 2, got {snippet_len}")
    if len(gt_poses) < snippet_len:
        raise TrajectoryError(f"sequence of {len(gt_poses)} poses is shorter than one snippet ({snippet_len})")


def ate_sequence(pred: TrajectoryLike, gt: TrajectoryLike, snippet_len: int = 5) -> AteSummary:
    """
    Mean and (population) standard deviation of ate_snippet over every
    window of `snippet_len` consecutive frames, stride 1.
    """
    pred_poses = _poses(pred)
    gt_poses = _poses(gt)
    _check_sequence(pred_poses, gt_poses, snippet_len)

    errors = [
        ate_snippet(pred_poses[start:start + snippet_len], gt_poses[start:start + snippet_len])
        for start in range(len(gt_poses) - snippet_len + 1)
    ]
    summary = _summary(errors, snippet_len)
    logger.info(f"ATE over {summary.n_snippets} snippets of {snippet_len}: {summary}")
    return summary


def mean_step(gt: TrajectoryLike) -> np.ndarray:
    """Average inter-frame translation of a trajectory, in the earlier frame's coordinates."""
    poses = _poses(gt)
    if len(poses) < 2:
        raise TrajectoryError("mean odometry needs at least two poses")
    steps = [
        compose(inverse(poses[k].detached()), poses[k + 1].detached()).translation.cpu().numpy()
        for k in range(len(poses) - 1)
    ]
    return np.mean(steps, axis=0)


def mean_odometry_baseline(gt: TrajectoryLike, snippet_len: int = 5) -> AteSummary:
    """
    ATE of the constant-motion baseline: every step of every snippet is the
    sequence's mean ground-truth step, with no rotation.
    """
    gt_poses = _poses(gt)
    _check_sequence(gt_poses, gt_poses, snippet_len)
    step = mean_step(gt_poses)
    prediction = [PoseSE3.from_translation(*(k * step)) for k in range(snippet_len)]

    errors = [
        ate_snippet(prediction, gt_poses[start:start + snippet_len])
        for start in range(len(gt_poses) - snippet_len + 1)
    ]
    return _summary(errors, snippet_len, baseline="mean-odometry")


def trajectory_from_adjacent(adjacent: Sequence[PoseSE3]) -> Trajectory:
    """
    Camera-to-world trajectory (first pose identity) from adjacent-pair
    poses adjacent[k] = T_{k->k+1}.
    """
    poses = [PoseSE3.identity()]
    for step in adjacent:
        poses.append(compose(poses[-1], inverse(step.detached())))
    return Trajectory(poses=poses)
