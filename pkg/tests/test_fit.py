"""
Direct-fit tests on rendered scenes.

The recovery tests run full optimisations and are marked slow.
"""

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from src.fit import optimizer
from src.fit.optimizer import (
    DepthBlock,
    LineSearch,
    PoseBlock,
    backtracking_line_search,
    evaluate,
    fit_snippet,
    freeze,
    gradient,
    initial_state,
    perturbed_pose,
    snippet_for_target,
)
from src.geometry.se3 import compose, inverse, relative_pose, rotation_angle
from src.losses.semantic import road_ordering_loss, semantic_mask
from src.metrics.depth import depth_metrics
from src.models.camera import DTYPE
from src.models.fit import FitConfig
from src.models.losses import LossTerms, LossWeights
from src.scene.presets import CAR, ROAD, moving_box_scene, street_scene
from src.scene.renderer import inconsistency_map, render_all
from src.verification.selftest import GRADIENT_TOLERANCE, gradient_check
from src.warping.synthesis import synthesize_labels


def _adjacent(frames):
    return [relative_pose(frames[k].pose, frames[k + 1].pose) for k in range(len(frames) - 1)]


def _inputs(frames):
    return [f.image for f in frames], [f.labels for f in frames]


def _valid_abs_rel(result, frames):
    """Mean abs_rel over frames, restricted to pixels with a valid warp."""
    depths = result.state.depths()
    values = []
    for target, report in result.reports.items():
        mask = report.maps["valid"].any(dim=0).numpy()
        values.append(depth_metrics(depths[target], frames[target].depth, mask=mask).abs_rel)
    return float(np.mean(values))


@pytest.fixture(scope="module")
def wide_street():
    spec = street_scene(width=128, height=64, n_frames=2)
    return spec, render_all(spec)


# ============================================================================
# Gradients
# ============================================================================

def test_gradient_vanishes_at_the_exact_solution(dyadic_spec, dyadic_frames):
    images, labels = _inputs(dyadic_frames)
    state = initial_state(2, 32, 64, [f.depth for f in dyadic_frames], _adjacent(dyadic_frames))
    config = FitConfig()
    with torch.no_grad():
        evaluation = evaluate(state.log_depth, state.pose_params, images, labels, dyadic_spec.intrinsics, config)
    assert float(evaluation.objective) <= 1e-3

    grad = gradient(
        state.log_depth, state.pose_params, images, labels, dyadic_spec.intrinsics, config,
        freeze(evaluation.reports),
    )
    assert float(grad.log_depth.abs().max()) <= 1e-4
    assert float(grad.pose_params.abs().max()) <= 1e-4


def test_smoothness_gradient_of_constant_depth_is_zero(street_spec, street_frames):
    images, labels = _inputs(street_frames)
    state = initial_state(3, 64, 128, 10.0, _adjacent(street_frames))
    config = FitConfig(weights=LossWeights(lambda_img=0.0, lambda_ss=0.0, lambda_3d=0.0, lambda_road=0.0))
    with torch.no_grad():
        frozen = freeze(evaluate(state.log_depth, state.pose_params, images, labels, street_spec.intrinsics, config).reports)
    grad = gradient(state.log_depth, state.pose_params, images, labels, street_spec.intrinsics, config, frozen)
    assert float(grad.log_depth.abs().max()) == 0.0


def test_snippet_for_target_uses_adjacent_frames(street_spec, street_frames):
    images, labels = _inputs(street_frames)
    depths = torch.stack([f.depth for f in street_frames])
    adjacent = _adjacent(street_frames)
    inputs = snippet_for_target(0, images, labels, street_spec.intrinsics, depths, adjacent)
    assert inputs.num_sources == 1
    torch.testing.assert_close(inputs.poses[0].translation, adjacent[0].translation, atol=1e-15, rtol=0)
    assert snippet_for_target(1, images, labels, street_spec.intrinsics, depths, adjacent).num_sources == 2


def test_initial_state_validation():
    with pytest.raises(ValueError):
        initial_state(2, 8, 8, init_depth=-1.0)
    with pytest.raises(ValueError):
        initial_state(2, 8, 8, init_depth=[torch.ones(8, 8, dtype=DTYPE)])
    state = initial_state(3, 8, 8, init_depth=4.0)
    assert bool((state.depths() == 4.0).all())
    assert state.pose_params.shape == (2, 6)


def test_fit_needs_two_frames(street_frames, street_spec):
    with pytest.raises(ValueError):
        fit_snippet([street_frames[0].image], [street_frames[0].labels], street_spec.intrinsics)


def test_fit_at_ground_truth_is_a_fixed_point(dyadic_spec, dyadic_frames):
    images, labels = _inputs(dyadic_frames)
    result = fit_snippet(
        images, labels, dyadic_spec.intrinsics, FitConfig(max_iterations=20, point_warmup_sweeps=0),
        init_depth=[f.depth for f in dyadic_frames], init_poses=_adjacent(dyadic_frames),
    )
    assert result.state.converged
    assert result.state.iteration <= 1
    assert result.report.total <= 1e-3
    torch.testing.assert_close(result.state.depths()[0], dyadic_frames[0].depth, atol=1e-9, rtol=0)


@pytest.mark.slow
def test_analytic_gradient_matches_finite_differences():
    for check in gradient_check(n_depth=50, seed=0):
        assert check.max_error <= GRADIENT_TOLERANCE, check


# ============================================================================
# Line search and block steps
# ============================================================================

def _square(x: torch.Tensor) -> float:
    return float((x ** 2).sum())


def test_line_search_halves_until_sufficient_decrease():
    x = torch.tensor([1.0], dtype=DTYPE)
    search = backtracking_line_search(_square, x, torch.tensor([-4.0], dtype=DTYPE), 1.0, -8.0, max_backtracks=5)
    assert search.accepted
    assert search.scale == 0.25
    assert search.value == 0.0


def test_line_search_rejects_ascent_directions():
    x = torch.tensor([1.0], dtype=DTYPE)
    search = backtracking_line_search(_square, x, torch.tensor([1.0], dtype=DTYPE), 1.0, 2.0, max_backtracks=30)
    assert search == LineSearch(accepted=False, scale=0.0, value=1.0)


def test_depth_block_grows_steps_while_the_sign_holds():
    block = DepthBlock((2, 2), FitConfig(depth_step=0.05))
    x = torch.zeros(2, 2, dtype=DTYPE)
    grad = -torch.ones(2, 2, dtype=DTYPE)

    def descending(z):
        return float(-z.sum())

    first = block.step(x, grad, descending(x), descending)
    second = block.step(first.x, grad, first.value, descending)
    assert (first.status, second.status) == ("moved", "moved")
    assert first.length == pytest.approx(0.05)
    assert second.length == pytest.approx(0.06)

    # A flipped sign shrinks the step and rests the entry for one sweep.
    rested = block.step(second.x, -grad, second.value, descending)
    assert rested.status == "rested"
    assert rested.length == 0.0
    torch.testing.assert_close(block.size, torch.full((2, 2), 0.03, dtype=DTYPE))


@pytest.mark.parametrize("max_backtracks, status", [(2, "stalled"), (30, "stationary")])
def test_depth_block_without_descent_stops_by_backtrack_budget(max_backtracks, status):
    block = DepthBlock((2, 2), FitConfig(max_backtracks=max_backtracks))
    x = torch.zeros(2, 2, dtype=DTYPE)
    result = block.step(x, torch.ones(2, 2, dtype=DTYPE), 0.0, lambda z: 1.0)
    assert result.status == status
    assert result.length == 0.0
    assert result.x is x


def test_depth_block_with_zero_gradient_is_stationary():
    block = DepthBlock((2, 2), FitConfig())
    x = torch.zeros(2, 2, dtype=DTYPE)
    assert block.step(x, torch.zeros_like(x), 0.0, lambda z: 1.0).status == "stationary"


def test_pose_block_retries_steepest_descent_before_giving_up():
    block = PoseBlock(FitConfig(pose_step=0.01))
    x = torch.tensor([[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]], dtype=DTYPE)

    first = block.step(x, 2 * x, _square(x), _square)
    assert first.status == "moved"
    assert first.length == pytest.approx(0.01)

    # A failed quasi-Newton direction falls back to a fresh start.
    rising = block.step(first.x, 2 * first.x, first.value, lambda p: 10.0)
    assert rising.status == "rested"
    assert block.inverse_hessian is None

    final = block.step(first.x, 2 * first.x, first.value, lambda p: 10.0)
    assert final.status == "stationary"


def test_pose_fit_moves_off_a_perturbed_start(dyadic_spec, dyadic_frames):
    images, labels = _inputs(dyadic_frames)
    truth = _adjacent(dyadic_frames)[0]
    start = perturbed_pose(truth, 0.002, 0.01, seed=0)
    terms = LossTerms(use_3d=False, use_automask=False)
    config = FitConfig(optimize_depth=False, max_iterations=5, terms=terms)
    depths = [f.depth for f in dyadic_frames]

    state = initial_state(2, 32, 64, depths, [start])
    with torch.no_grad():
        initial = float(evaluate(state.log_depth, state.pose_params, images, labels, dyadic_spec.intrinsics, config).objective)
    result = fit_snippet(images, labels, dyadic_spec.intrinsics, config, init_depth=depths, init_poses=[start])
    assert result.state.halted is None
    assert result.state.history[0]["pose_step"] > 0.0
    assert result.state.history[-1]["objective"] < initial


def test_fit_halts_when_no_descent_step_is_found(monkeypatch, dyadic_spec, dyadic_frames):
    images, labels = _inputs(dyadic_frames)
    monkeypatch.setattr(
        optimizer, "backtracking_line_search", lambda fn, x, d, value, slope, n: LineSearch(False, 0.0, value)
    )
    init = [1.5 * f.depth for f in dyadic_frames]
    config = FitConfig(optimize_pose=False, max_iterations=20, max_backtracks=2)
    result = fit_snippet(images, labels, dyadic_spec.intrinsics, config, init_depth=init, init_poses=_adjacent(dyadic_frames))
    assert result.state.halted.startswith("no descent step within 2 backtracks")
    assert not result.state.converged
    assert result.state.iteration == 1
    torch.testing.assert_close(result.state.depths()[0], init[0])


def test_fit_converges_when_backtracking_reaches_step_tolerance(monkeypatch, dyadic_spec, dyadic_frames):
    images, labels = _inputs(dyadic_frames)
    monkeypatch.setattr(
        optimizer, "backtracking_line_search", lambda fn, x, d, value, slope, n: LineSearch(False, 0.0, value)
    )
    init = [1.5 * f.depth for f in dyadic_frames]
    config = FitConfig(optimize_pose=False, max_iterations=20, point_warmup_sweeps=0)
    result = fit_snippet(images, labels, dyadic_spec.intrinsics, config, init_depth=init, init_poses=_adjacent(dyadic_frames))
    assert result.state.halted is None
    assert result.state.converged
    assert result.state.iteration == 1


# ============================================================================
# Recovery
# ============================================================================

@pytest.mark.slow
def test_depth_recovery_with_known_pose(wide_street):
    spec, frames = wide_street
    images, labels = _inputs(frames)
    config = FitConfig(optimize_pose=False, max_iterations=500, terms=LossTerms(use_automask=False))
    result = fit_snippet(
        images, labels, spec.intrinsics, config,
        init_depth=[0.5 * f.depth for f in frames], init_poses=_adjacent(frames),
    )
    assert result.state.halted is None
    assert _valid_abs_rel(result, frames) <= 0.02
    assert result.state.history[-1]["objective"] < result.state.history[0]["objective"]


@pytest.mark.slow
def test_pose_recovery_with_known_depth(wide_street):
    spec, frames = wide_street
    images, labels = _inputs(frames)
    truth = _adjacent(frames)[0]
    config = FitConfig(optimize_depth=False, max_iterations=200, terms=LossTerms(use_automask=False))
    result = fit_snippet(
        images, labels, spec.intrinsics, config,
        init_depth=[f.depth for f in frames], init_poses=[perturbed_pose(truth, 0.05, 0.1, seed=1)],
    )
    recovered = result.state.adjacent_poses()[0].detached()
    assert rotation_angle(compose(inverse(truth), recovered)) <= 1e-3
    translation_error = float((recovered.translation - truth.translation).norm() / truth.translation.norm())
    assert translation_error <= 0.01


def test_semantic_mask_covers_moving_object_inconsistencies(box_spec, box_frames):
    target, source = 1, 0
    pose = relative_pose(box_frames[target].pose, box_frames[source].pose)
    labels = synthesize_labels(box_frames[source].labels, box_frames[target].depth, box_spec.intrinsics, pose)
    mask = semantic_mask(box_frames[target].labels, labels.values, labels.valid).numpy()

    inconsistent, _ = inconsistency_map(box_spec, target, source)
    assert inconsistent.any()
    assert (mask & inconsistent).sum() >= 0.95 * inconsistent.sum()


@pytest.mark.slow
def test_semantic_mask_improves_static_depth_near_moving_object():
    # The box drives against the camera, so static pixels next to it reproject onto the car.
    spec = moving_box_scene(width=128, height=64, n_frames=2, box_velocity=(-0.5, 0.0, 0.0))
    frames = render_all(spec)
    images, labels = _inputs(frames)
    truth = [f.depth for f in frames]

    def near_car(frame):
        car = (frame.labels == CAR).to(DTYPE)[None, None]
        grown = F.max_pool2d(car, kernel_size=17, stride=1, padding=8)[0, 0] > 0
        return (grown & (frame.labels != CAR)).numpy()

    def static_abs_rel(terms):
        config = FitConfig(optimize_pose=False, max_iterations=100, terms=terms)
        result = fit_snippet(images, labels, spec.intrinsics, config, init_depth=truth, init_poses=_adjacent(frames))
        depths = result.state.depths()
        values = []
        for target, report in result.reports.items():
            mask = near_car(frames[target]) & report.maps["valid"].any(dim=0).numpy()
            values.append(depth_metrics(depths[target], frames[target].depth, mask=mask).abs_rel)
        return float(np.mean(values))

    masked = static_abs_rel(LossTerms(use_ss=False, use_road=False, use_3d=False))
    unmasked = static_abs_rel(LossTerms(use_ss=False, use_road=False, use_3d=False, use_semantic_mask=False))
    assert unmasked > 0.0
    assert (unmasked - masked) / unmasked >= 0.2


@pytest.mark.slow
@pytest.mark.parametrize("lambda_road", [0.1, 0.0])
def test_road_prior_repairs_inverted_ground_depth(lambda_road):
    spec = street_scene(width=64, height=32, n_frames=2)
    frames = render_all(spec)
    images, labels = _inputs(frames)

    init = []
    for frame in frames:
        depth = frame.depth.clone()
        rows = [v for v in range(depth.shape[0]) if bool((frame.labels[v] == ROAD).all())]
        depth[rows] = frame.depth[rows[::-1]]
        init.append(depth)
    initial_count = road_ordering_loss(init[0], frames[0].labels).count
    assert initial_count > 0

    weights = LossWeights(lambda_img=0.0, lambda_ss=0.0, lambda_3d=0.0, lambda_road=lambda_road)
    config = FitConfig(weights=weights, optimize_pose=False, max_iterations=500)
    result = fit_snippet(images, labels, spec.intrinsics, config, init_depth=init, init_poses=_adjacent(frames))
    count = road_ordering_loss(result.state.depths()[0], frames[0].labels).count
    if lambda_road > 0:
        assert count == 0
    else:
        assert count > 0
