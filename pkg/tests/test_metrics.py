"""
Tests for depth metrics and the snippet ATE.
"""

import math

import numpy as np
import pytest

from src.exceptions import DimensionMismatchError, EmptyEvaluationError, TrajectoryError
from src.geometry.se3 import compose, exp6, relative_pose
from src.metrics.depth import depth_metrics, evaluate_depth_set, median_scale
from src.metrics.trajectory import (
    anchored_positions,
    ate_sequence,
    ate_snippet,
    mean_odometry_baseline,
    scale_alignment,
    trajectory_from_adjacent,
)
from src.models.camera import PoseSE3


def _translations(*xyz):
    return [PoseSE3.identity()] + [PoseSE3.from_translation(*t) for t in xyz]


# ============================================================================
# Depth
# ============================================================================

def test_four_pixel_hand_instance():
    gt = np.array([2.0, 4.0, 8.0, 16.0])
    pred = np.array([2.0, 5.0, 8.0, 20.0])
    result = depth_metrics(pred, gt)
    assert result.abs_rel == pytest.approx(0.125)
    # ratios of exactly 1.25 fail the strict threshold
    assert result.delta1 == 0.5
    assert result.delta2 == 1.0
    assert result.n_pixels == 4


def test_perfect_prediction():
    gt = np.random.default_rng(0).uniform(1.0, 70.0, size=(6, 9))
    result = depth_metrics(gt.copy(), gt)
    assert result.abs_rel == 0.0
    assert result.rmse_log == 0.0
    assert (result.delta1, result.delta2, result.delta3) == (1.0, 1.0, 1.0)


def test_median_scaling_absorbs_a_global_scale():
    gt = np.random.default_rng(1).uniform(1.0, 70.0, size=(6, 9))
    result = depth_metrics(gt * 0.2, gt, median_scaling=True)
    assert result.abs_rel == pytest.approx(0.0, abs=1e-12)
    assert result.scale == pytest.approx(5.0)
    assert result.delta1 == 1.0


@pytest.mark.parametrize("c", [2.0, 0.37, 2.4])
def test_joint_scaling_of_prediction_and_ground_truth(c):
    rng = np.random.default_rng(2)
    gt = rng.uniform(1.0, 20.0, size=(7, 11))
    pred = gt * rng.uniform(0.6, 1.6, size=gt.shape)
    base = depth_metrics(pred, gt)
    scaled = depth_metrics(c * pred, c * gt)
    assert scaled.abs_rel == pytest.approx(base.abs_rel, rel=1e-12)
    assert scaled.sq_rel == pytest.approx(c * base.sq_rel, rel=1e-12)
    assert scaled.rmse == pytest.approx(c * base.rmse, rel=1e-12)
    assert scaled.rmse_log == pytest.approx(base.rmse_log, rel=1e-9)
    assert (scaled.delta1, scaled.delta2, scaled.delta3) == (base.delta1, base.delta2, base.delta3)
    assert scaled.n_pixels == base.n_pixels


def test_median_scale():
    gt = np.array([1.0, 3.0, 9.0])
    assert median_scale(gt, gt) == 1.0
    assert median_scale(gt / 2, gt) == 2.0
    assert median_scale(np.array([1.0, 2.0, 100.0]), gt, mask=np.array([True, True, False])) == pytest.approx(2.0 / 1.5)


def test_cap_and_mask_select_pixels():
    gt = np.array([[5.0, 90.0], [0.0, 10.0]])
    pred = np.array([[5.0, 1.0], [1.0, 12.0]])
    result = depth_metrics(pred, gt, mask=np.array([[True, True], [True, False]]))
    assert result.n_pixels == 1
    assert result.abs_rel == 0.0


def test_no_valid_pixel_is_an_error():
    with pytest.raises(EmptyEvaluationError):
        depth_metrics(np.ones((2, 2)), np.full((2, 2), 100.0))
    with pytest.raises(EmptyEvaluationError):
        median_scale(np.ones(2), np.ones(2), mask=np.zeros(2, dtype=bool))


def test_shape_mismatch_is_an_error():
    with pytest.raises(DimensionMismatchError):
        depth_metrics(np.ones((2, 3)), np.ones((3, 2)))


def test_evaluate_depth_set_averages_per_image():
    gt = [np.full((2, 2), 4.0), np.full((2, 2), 8.0)]
    pred = [np.full((2, 2), 5.0), np.full((2, 2), 8.0)]
    table = evaluate_depth_set(pred, gt, median_scaling=False, names=["a", "b"])
    assert list(table.index) == ["a", "b"]
    assert table.loc["a", "abs_rel"] == pytest.approx(0.25)
    assert table["abs_rel"].mean() == pytest.approx(0.125)


# ============================================================================
# Trajectory
# ============================================================================

def test_three_frame_hand_instance():
    pred = _translations((1.0, 0.0, 0.0), (2.0, 0.0, 0.0))
    gt = _translations((1.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    assert scale_alignment(anchored_positions(pred), anchored_positions(gt)) == pytest.approx(0.6)
    # errors 0.4 and 0.2 over the two frames after the anchor
    assert ate_snippet(pred, gt) == pytest.approx(math.sqrt(0.1), abs=1e-12)


def test_ate_is_zero_for_identical_and_scaled_trajectories():
    gt = [exp6([0.01 * k, 0.0, 0.02, 0.9 * k, 0.1 * k, 0.05]) for k in range(5)]
    assert ate_snippet(gt, gt) == pytest.approx(0.0, abs=1e-12)
    doubled = _translations((2.0, 0.0, 0.0), (4.0, 2.0, 0.0))
    base = _translations((1.0, 0.0, 0.0), (2.0, 1.0, 0.0))
    assert ate_snippet(doubled, base) == pytest.approx(0.0, abs=1e-12)


def test_ate_is_independent_of_the_world_frame():
    gt = _translations((1.0, 0.0, 0.0), (1.0, 0.5, 0.0))
    pred = _translations((1.2, 0.0, 0.0), (2.0, 0.0, 0.0))
    offset = exp6([0.0, 0.3, 0.0, 5.0, -1.0, 2.0])
    moved = [compose(offset, pose) for pose in gt]
    assert ate_snippet(pred, moved) == pytest.approx(ate_snippet(pred, gt), abs=1e-12)


def test_null_prediction_uses_zero_scale():
    pred = [PoseSE3.identity()] * 3
    gt = _translations((3.0, 0.0, 0.0), (0.0, 4.0, 0.0))
    assert ate_snippet(pred, gt) == pytest.approx(math.sqrt((9.0 + 16.0) / 2.0))


def test_length_mismatch_is_an_error():
    with pytest.raises(TrajectoryError):
        ate_snippet(_translations((1.0, 0.0, 0.0)), _translations((1.0, 0.0, 0.0), (2.0, 0.0, 0.0)))


@pytest.mark.parametrize("snippet_len", [3, 5])
def test_ate_sequence_of_ground_truth_is_zero(snippet_len):
    gt = [exp6([0.0, 0.01 * k, 0.0, 0.0, 0.0, 1.0 * k]) for k in range(8)]
    summary = ate_sequence(gt, gt, snippet_len)
    assert summary.n_snippets == 8 - snippet_len + 1
    assert summary.mean == pytest.approx(0.0, abs=1e-12)
    assert str(summary) == "0.000 ± 0.000"


def test_ate_sequence_matches_brute_force_windowing():
    rng = np.random.default_rng(3)
    gt = [exp6(np.concatenate([rng.normal(0, 0.02, 3), [0.0, 0.0, float(k)]])) for k in range(7)]
    pred = [exp6(np.concatenate([rng.normal(0, 0.02, 3), rng.normal(0, 0.3, 3)])) for _ in range(7)]
    errors = [ate_snippet(pred[s:s + 3], gt[s:s + 3]) for s in range(5)]
    summary = ate_sequence(pred, gt, 3)
    assert summary.mean == pytest.approx(np.mean(errors), abs=1e-12)
    assert summary.std == pytest.approx(np.std(errors), abs=1e-12)


def test_sequence_shorter_than_a_snippet_is_an_error():
    gt = _translations((1.0, 0.0, 0.0))
    with pytest.raises(TrajectoryError):
        ate_sequence(gt, gt, 5)


def test_mean_odometry_baseline_is_exact_for_constant_motion():
    gt = [PoseSE3.from_translation(0.0, 0.0, 1.3 * k) for k in range(6)]
    summary = mean_odometry_baseline(gt, 5)
    assert summary.mean == pytest.approx(0.0, abs=1e-12)
    assert summary.baseline == "mean-odometry"


def test_trajectory_from_adjacent_recovers_camera_poses():
    camera_to_world = [exp6([0.02 * k, -0.01, 0.0, 0.3, 0.0, 1.0 * k]) for k in range(4)]
    adjacent = [relative_pose(camera_to_world[k], camera_to_world[k + 1]) for k in range(3)]
    trajectory = trajectory_from_adjacent(adjacent)
    assert len(trajectory) == 4
    np.testing.assert_allclose(
        anchored_positions(trajectory), anchored_positions(camera_to_world), atol=1e-12
    )
