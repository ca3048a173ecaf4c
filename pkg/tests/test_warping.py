"""
Tests for raster sampling and inverse-warping view synthesis.
"""

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from src.models.camera import DTYPE, Intrinsics, PoseSE3
from src.warping.sampling import bilinear_sample, nearest_sample, round_half_away, sample_depth
from src.warping.synthesis import synthesize_labels, synthesize_view


def _raster(height=5, width=7, channels=3, seed=0):
    rng = np.random.default_rng(seed)
    return torch.from_numpy(rng.uniform(size=(channels, height, width))).to(DTYPE)


def test_bilinear_at_pixel_centres_returns_raster_values():
    src = _raster()
    v, u = torch.meshgrid(torch.arange(5, dtype=DTYPE), torch.arange(7, dtype=DTYPE), indexing="ij")
    sampled = bilinear_sample(src, u, v)
    assert torch.equal(sampled.values, src)
    assert sampled.valid.all()


def test_bilinear_midpoint_is_average():
    src = _raster()
    sampled = bilinear_sample(src, torch.tensor([2.5], dtype=DTYPE), torch.tensor([1.0], dtype=DTYPE))
    expected = (src[:, 1, 2] + src[:, 1, 3]) / 2
    torch.testing.assert_close(sampled.values[:, 0], expected, atol=1e-15, rtol=0)


def test_last_lattice_line_is_valid():
    src = _raster()
    sampled = bilinear_sample(src, torch.tensor([6.0], dtype=DTYPE), torch.tensor([4.0], dtype=DTYPE))
    assert bool(sampled.valid[0])
    assert torch.equal(sampled.values[:, 0], src[:, 4, 6])


def test_out_of_bounds_samples_are_invalid_but_finite():
    src = _raster()
    u = torch.tensor([-0.5, 6.01, 3.0, 3.0], dtype=DTYPE)
    v = torch.tensor([1.0, 1.0, -1e-3, 4.5], dtype=DTYPE)
    sampled = bilinear_sample(src, u, v)
    assert not sampled.valid.any()
    assert torch.isfinite(sampled.values).all()


def test_near_integer_coordinates_snap_to_lattice():
    src = _raster()
    sampled = bilinear_sample(src, torch.tensor([3.0 - 1e-12], dtype=DTYPE), torch.tensor([2.0 + 1e-12], dtype=DTYPE))
    assert torch.equal(sampled.values[:, 0], src[:, 2, 3])


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.0, max_value=6.0), st.floats(min_value=0.0, max_value=4.0))
def test_bilinear_is_a_convex_combination(u, v):
    src = _raster(channels=1)
    sampled = bilinear_sample(src, torch.tensor([u], dtype=DTYPE), torch.tensor([v], dtype=DTYPE))
    value = float(sampled.values[0, 0])
    assert float(src.min()) - 1e-15 <= value <= float(src.max()) + 1e-15


def test_round_half_away_from_zero():
    values = torch.tensor([-1.5, -0.5, 0.5, 1.5, 2.49], dtype=DTYPE)
    assert round_half_away(values).tolist() == [-2.0, -1.0, 1.0, 2.0, 2.0]


def test_nearest_sample_never_blends_labels():
    labels = torch.tensor([[0, 13], [2, 255]])
    sampled = nearest_sample(labels, torch.tensor([0.4, 0.5, 0.9], dtype=DTYPE), torch.tensor([0.2, 0.2, 0.7], dtype=DTYPE))
    assert sampled.values.tolist() == [0, 13, 255]


def test_sample_depth_requires_2d_raster():
    with pytest.raises(ValueError):
        sample_depth(_raster(), torch.tensor([0.0], dtype=DTYPE), torch.tensor([0.0], dtype=DTYPE))


def test_identity_pose_reproduces_source_exactly():
    src = _raster(8, 8)
    depth = torch.full((8, 8), 3.0, dtype=DTYPE)
    K = Intrinsics(fx=10.0, fy=10.0, cx=3.5, cy=3.5)
    view = synthesize_view(src, depth, K, PoseSE3.identity())
    assert torch.equal(view.values, src)
    assert view.valid.all()


def test_dyadic_scene_warp_is_a_four_pixel_shift(dyadic_snippet):
    inputs = dyadic_snippet
    view = synthesize_view(inputs.source_images[0], inputs.target_depth, inputs.K, inputs.poses[0])
    labels = synthesize_labels(inputs.source_labels[0], inputs.target_depth, inputs.K, inputs.poses[0])

    assert not view.valid[:, :4].any()
    assert view.valid[:, 4:].all()
    u = torch.arange(64, dtype=DTYPE).expand(32, 64)
    torch.testing.assert_close(view.coords.u, u - 4.0, atol=1e-12, rtol=0)
    torch.testing.assert_close(
        view.values[:, :, 4:], inputs.source_images[0][:, :, :-4], atol=1e-12, rtol=0
    )
    torch.testing.assert_close(
        view.values[:, :, 4:], inputs.target_image[:, :, 4:], atol=1e-12, rtol=0
    )
    assert torch.equal(labels.values[:, 4:], inputs.target_labels[:, 4:])


def test_points_behind_source_camera_are_invalid():
    src = _raster(8, 8)
    depth = torch.full((8, 8), 1.0, dtype=DTYPE)
    K = Intrinsics(fx=10.0, fy=10.0, cx=3.5, cy=3.5)
    view = synthesize_view(src, depth, K, PoseSE3.from_translation(0.0, 0.0, -2.0))
    assert not view.valid.any()


def test_bilinear_coordinate_gradient_matches_central_differences():
    src = _raster(channels=1)
    rng = np.random.default_rng(3)
    cells_u = torch.from_numpy(rng.integers(0, 6, size=20)).to(DTYPE)
    cells_v = torch.from_numpy(rng.integers(0, 4, size=20)).to(DTYPE)
    u0 = cells_u + torch.from_numpy(rng.uniform(0.1, 0.9, size=20)).to(DTYPE)
    v0 = cells_v + torch.from_numpy(rng.uniform(0.1, 0.9, size=20)).to(DTYPE)

    u = u0.clone().requires_grad_(True)
    v = v0.clone().requires_grad_(True)
    bilinear_sample(src, u, v).values.sum().backward()

    h = 1e-4

    def at(uu, vv):
        return bilinear_sample(src, uu, vv).values[0]

    numeric_u = (at(u0 + h, v0) - at(u0 - h, v0)) / (2 * h)
    numeric_v = (at(u0, v0 + h) - at(u0, v0 - h)) / (2 * h)
    for analytic, numeric in ((u.grad, numeric_u), (v.grad, numeric_v)):
        relative = (analytic - numeric).abs() / numeric.abs().clamp(min=1e-3)
        assert float(relative.max()) <= 1e-5


def test_static_street_synthesis_matches_the_target(street_snippet):
    for image, pose in zip(street_snippet.source_images, street_snippet.poses):
        view = synthesize_view(image, street_snippet.target_depth, street_snippet.K, pose)
        assert float(view.valid.to(DTYPE).mean()) > 0.5
        error = (view.values - street_snippet.target_image).abs().mean(dim=0)[view.valid]
        assert float(error.mean()) <= 2e-3
