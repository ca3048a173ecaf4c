"""
Selftest suite: oracle equivalence of every loss term on random instances
and an analytic-versus-finite-difference gradient check on a rendered
snippet.
"""

import time
from collections import defaultdict
from typing import Dict, List, Optional

import numpy as np
import torch

from src.exceptions import SelftestFailure
from src.fit.optimizer import evaluate, freeze, gradient, perturbed_pose
from src.geometry.se3 import relative_pose
from src.losses.photometric import automask, masked_image_loss, min_reprojection_loss, recon_error, smoothness_loss
from src.losses.point3d import point_loss_3d
from src.losses.semantic import road_ordering_loss, semantic_loss, semantic_mask
from src.losses.total import total_loss
from src.models.camera import DTYPE
from src.models.fit import FitConfig
from src.models.losses import LossTerms, LossWeights
from src.models.selftest import CheckResult, SelftestReport
from src.scene.presets import street_scene
from src.scene.renderer import render_all
from src.utils.logger import setup_logger
from src.verification import oracles
from src.verification.instances import Instance, random_instances
from src.warping.synthesis import synthesize_labels, synthesize_view

logger = setup_logger(__name__)

ORACLE_TOLERANCE = 1e-12
GRADIENT_TOLERANCE = 1e-3
# Gradients smaller than this are compared in absolute terms.
GRADIENT_FLOOR = 1e-8


def _max_abs(a, b) -> float:
    a = a.detach().cpu().numpy() if isinstance(a, torch.Tensor) else np.asarray(a, dtype=float)
    b = b.detach().cpu().numpy() if isinstance(b, torch.Tensor) else np.asarray(b, dtype=float)
    return float(np.abs(a.astype(float) - b.astype(float)).max())


def _mismatches(a, b) -> float:
    a = a.detach().cpu().numpy() if isinstance(a, torch.Tensor) else np.asarray(a)
    return float((a != np.asarray(b)).sum())


def compare_instance(instance: Instance, weights: Optional[LossWeights] = None) -> Dict[str, float]:
    """Largest library-versus-oracle difference per quantity on one instance."""
    weights = weights or LossWeights()
    inputs = instance.inputs
    K = inputs.K
    depth = inputs.target_depth

    views = [synthesize_view(img, depth, K, pose) for img, pose in zip(inputs.source_images, inputs.poses)]
    label_views = [synthesize_labels(lab, depth, K, pose) for lab, pose in zip(inputs.source_labels, inputs.poses)]
    warps = [
        oracles.warp(K, img, lab, depth, pose)
        for img, lab, pose in zip(inputs.source_images, inputs.source_labels, inputs.poses)
    ]
    valid = [view.valid for view in views]
    synthesized = [view.values for view in views]
    masks = [semantic_mask(inputs.target_labels, lv.values, v) for lv, v in zip(label_views, valid)]
    oracle_masks = [oracles.semantic_mask(inputs.target_labels, w) for w in warps]
    oracle_errors = oracles.reprojection_errors(inputs.target_image, warps, inputs.source_images, weights.alpha)

    errors = {
        "synthesis": max(_max_abs(view.values, w.image) for view, w in zip(views, warps)),
        "validity": sum(_mismatches(view.valid, w.valid) for view, w in zip(views, warps)),
        "label synthesis": sum(
            _mismatches(torch.where(v, lv.values, -1), np.where(w.valid, w.labels, -1))
            for lv, v, w in zip(label_views, valid, warps)
        ),
        "semantic mask": sum(_mismatches(m, om) for m, om in zip(masks, oracle_masks)),
        "recon error": _max_abs(
            recon_error(inputs.target_image, inputs.source_images[0], weights.alpha),
            oracle_errors.identity[0],
        ),
    }

    oracle_plain = oracles.image_loss(
        inputs.target_image, warps, inputs.source_images, None, weights.b, weights.alpha, errors=oracle_errors
    )
    errors["automask"] = _mismatches(
        automask(inputs.target_image, synthesized, inputs.source_images, valid, weights.alpha), oracle_plain.mu
    )
    errors["min reprojection"] = abs(
        float(min_reprojection_loss(inputs.target_image, synthesized, inputs.source_images, valid, weights.alpha))
        - oracle_plain.value
    )
    masked = masked_image_loss(
        inputs.target_image, synthesized, inputs.source_images, masks, valid, weights.b, weights.alpha
    )
    oracle_masked = oracles.image_loss(
        inputs.target_image, warps, inputs.source_images, oracle_masks, weights.b, weights.alpha, errors=oracle_errors
    )
    errors["masked image loss"] = abs(float(masked.value) - oracle_masked.value)
    errors["semantic loss"] = abs(
        float(semantic_loss(inputs.target_labels, [lv.values for lv in label_views], [lv.valid for lv in label_views]).value)
        - oracles.semantic_loss(inputs.target_labels, warps)
    )

    road = road_ordering_loss(depth, inputs.target_labels, weights.road_class_ids)
    oracle_road = oracles.road_ordering(depth, inputs.target_labels, weights.road_class_ids)
    errors["road ordering"] = max(
        abs(float(road.value) - oracle_road.value),
        abs(float(road.surrogate) - oracle_road.surrogate),
        float(road.count != oracle_road.count),
    )
    errors["smoothness"] = abs(
        float(smoothness_loss(depth, inputs.target_image)) - oracles.smoothness(depth, inputs.target_image)
    )
    errors["point loss"] = abs(
        float(point_loss_3d(depth, inputs.source_depths, K, inputs.poses, masks, weights.h).value)
        - oracles.point_loss(K, depth, inputs.source_depths, inputs.poses, oracle_masks, weights.h)
    )
    oracle_total = oracles.total_loss(inputs, weights, LossTerms(), warps=warps, errors=oracle_errors)
    errors["total loss"] = abs(total_loss(inputs, weights, LossTerms()).total - oracle_total.total)
    return errors


def oracle_suite(n_instances: int = 200, seed: int = 0) -> List[CheckResult]:
    """Compare every term with its brute-force oracle on random 8x8 instances."""
    worst: Dict[str, float] = defaultdict(float)
    for instance in random_instances(n_instances, seed):
        for name, error in compare_instance(instance).items():
            worst[name] = max(worst[name], error)
    return [
        CheckResult(name=name, max_error=error, tolerance=ORACLE_TOLERANCE, cases=n_instances)
        for name, error in worst.items()
    ]


def relative_errors(analytic: torch.Tensor, numeric: torch.Tensor) -> torch.Tensor:
    scale = torch.maximum(torch.maximum(analytic.abs(), numeric.abs()), torch.tensor(GRADIENT_FLOOR, dtype=DTYPE))
    return (analytic - numeric).abs() / scale


def gradient_check(n_depth: int = 50, seed: int = 0, width: int = 64, height: int = 32) -> List[CheckResult]:
    """
    Analytic gradients of the frozen-mask objective against central differences.

    The snippet is a rendered 3-frame street scene; depth starts within 10%
    of the truth and the poses slightly off, so every term is active.
    """
    spec = street_scene(width=width, height=height, n_frames=3, seed=seed)
    frames = render_all(spec)
    rng = np.random.default_rng(seed)

    depths = torch.stack([f.depth for f in frames])
    noise = torch.from_numpy(rng.uniform(-0.1, 0.1, size=tuple(depths.shape))).to(DTYPE)
    log_depth = torch.log2(depths) + noise
    adjacent = [
        perturbed_pose(relative_pose(frames[k].pose, frames[k + 1].pose), 0.01, 0.02, seed=seed + k)
        for k in range(len(frames) - 1)
    ]
    pose_params = torch.stack([p.param6 for p in adjacent])

    images = [f.image for f in frames]
    labels = [f.labels for f in frames]
    config = FitConfig(terms=LossTerms())
    with torch.no_grad():
        frozen = freeze(evaluate(log_depth, pose_params, images, labels, spec.intrinsics, config).reports)

    picked = [int(i) for i in rng.choice(log_depth.numel(), size=n_depth, replace=False)]
    analytic = gradient(log_depth, pose_params, images, labels, spec.intrinsics, config, frozen, mode="analytic")
    numeric = gradient(
        log_depth, pose_params, images, labels, spec.intrinsics, config, frozen,
        mode="finite-difference", depth_indices=picked,
    )

    depth_error = relative_errors(analytic.log_depth.reshape(-1)[picked], numeric.log_depth.reshape(-1)[picked])
    pose_error = relative_errors(analytic.pose_params.reshape(-1), numeric.pose_params.reshape(-1))
    return [
        CheckResult(name="depth gradient", max_error=float(depth_error.max()), tolerance=GRADIENT_TOLERANCE, cases=n_depth),
        CheckResult(
            name="pose gradient", max_error=float(pose_error.max()), tolerance=GRADIENT_TOLERANCE,
            cases=int(pose_error.numel()),
        ),
    ]


def run_selftest(
    n_instances: int = 200,
    seed: int = 0,
    include_gradient: bool = True,
    raise_on_failure: bool = True,
) -> SelftestReport:
    """
    Run the oracle suite and the gradient check.

    Raises:
        SelftestFailure: a check exceeded its tolerance (when raise_on_failure)
    """
    start = time.perf_counter()
    checks = oracle_suite(n_instances, seed)
    if include_gradient:
        checks.extend(gradient_check(seed=seed))
    report = SelftestReport(checks=checks, elapsed=time.perf_counter() - start)
    logger.info(f"Selftest finished: {len(checks) - len(report.failures())}/{len(checks)} checks passed")
    if raise_on_failure and not report.passed:
        names = ", ".join(f"{c.name} ({c.max_error:.3e})" for c in report.failures())
        raise SelftestFailure(f"selftest failed: {names}")
    return report
