"""
Brute-force reference implementations of the warping and loss terms.

Everything here walks pixels one at a time with plain floats, sharing no
code with the vectorised library. The selftest and the test suite compare
both to 1e-12.
"""

import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.models.losses import IGNORE_LABEL, LossTerms, LossWeights
from src.models.snippet import SnippetInputs

SNAP = 1e-9


def _array(x) -> np.ndarray:
    if hasattr(x, "detach"):
        return x.detach().cpu().numpy().astype(np.float64)
    return np.asarray(x, dtype=np.float64)


def _labels(x) -> np.ndarray:
    if hasattr(x, "detach"):
        return x.detach().cpu().numpy().astype(np.int64)
    return np.asarray(x, dtype=np.int64)


class Pose(NamedTuple):
    R: List[List[float]]
    t: List[float]


def _pose(pose) -> Pose:
    return Pose(R=_array(pose.rotation).tolist(), t=_array(pose.translation).tolist())


def _snap(c: float) -> float:
    r = math.floor(c + 0.5)
    return float(r) if abs(c - r) < SNAP else c


def _round_half_away(c: float) -> int:
    return int(math.copysign(math.floor(abs(c) + 0.5), c))


def project_point(K, pose: Pose, u: float, v: float, d: float) -> Tuple[float, float, bool]:
    """Source pixel of target pixel (u, v) at depth d, and whether it lies in front."""
    x = (u - K.cx) / K.fx * d
    y = (v - K.cy) / K.fy * d
    p = [x, y, d]
    q = [sum(pose.R[r][c] * p[c] for c in range(3)) + pose.t[r] for r in range(3)]
    in_front = q[2] > 0
    z = q[2] if in_front else 1.0
    return K.fx * q[0] / z + K.cx, K.fy * q[1] / z + K.cy, in_front


def bilinear(raster, u: float, v: float) -> Tuple[List[float], bool]:
    """Values of a (C, H, W) raster, nested lists or an array, at (u, v) and the in-bounds flag."""
    height, width = len(raster[0]), len(raster[0][0])
    u, v = _snap(u), _snap(v)
    valid = 0 <= u <= width - 1 and 0 <= v <= height - 1
    uc = min(max(u, 0.0), width - 1.0)
    vc = min(max(v, 0.0), height - 1.0)
    x0 = min(math.floor(uc), max(width - 2, 0))
    y0 = min(math.floor(vc), max(height - 2, 0))
    fx, fy = uc - x0, vc - y0
    x1, y1 = min(x0 + 1, width - 1), min(y0 + 1, height - 1)
    values = []
    for ch in raster:
        values.append(
            (1 - fx) * (1 - fy) * ch[y0][x0]
            + fx * (1 - fy) * ch[y0][x1]
            + (1 - fx) * fy * ch[y1][x0]
            + fx * fy * ch[y1][x1]
        )
    return values, valid


def nearest(labels, u: float, v: float) -> Tuple[int, bool]:
    height, width = len(labels), len(labels[0])
    u, v = _snap(u), _snap(v)
    valid = 0 <= u <= width - 1 and 0 <= v <= height - 1
    col = min(max(_round_half_away(u), 0), width - 1)
    row = min(max(_round_half_away(v), 0), height - 1)
    return int(labels[row][col]), valid


class Warp(NamedTuple):
    image: np.ndarray
    labels: np.ndarray
    valid: np.ndarray


def warp(K, image, labels, depth, pose) -> Warp:
    """Synthesized image and labels of one source, pixel by pixel."""
    image, labels, depth, pose = _array(image), _labels(labels), _array(depth), _pose(pose)
    height, width = depth.shape
    image, labels, depth = image.tolist(), labels.tolist(), depth.tolist()
    out = np.zeros((3, height, width))
    out_labels = np.zeros((height, width), dtype=np.int64)
    valid = np.zeros((height, width), dtype=bool)
    for v in range(height):
        for u in range(width):
            su, sv, in_front = project_point(K, pose, float(u), float(v), depth[v][u])
            values, inside = bilinear(image, su, sv)
            label, _ = nearest(labels, su, sv)
            out[:, v, u] = values
            out_labels[v][u] = label
            valid[v][u] = inside and in_front
    return Warp(image=out, labels=out_labels, valid=valid)


def _reflect(k: int, n: int) -> int:
    if k < 0:
        return -k
    if k > n - 1:
        return 2 * (n - 1) - k
    return k


def ssim(a, b) -> np.ndarray:
    a, b = _array(a), _array(b)
    channels, height, width = a.shape
    a, b = a.tolist(), b.tolist()
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    out = np.zeros((height, width))
    for v in range(height):
        for u in range(width):
            total = 0.0
            for c in range(channels):
                sa = sb = saa = sbb = sab = 0.0
                for dv in (-1, 0, 1):
                    for du in (-1, 0, 1):
                        y, x = _reflect(v + dv, height), _reflect(u + du, width)
                        pa, pb = a[c][y][x], b[c][y][x]
                        sa += pa
                        sb += pb
                        saa += pa * pa
                        sbb += pb * pb
                        sab += pa * pb
                mu_a, mu_b = sa / 9.0, sb / 9.0
                var_a = saa / 9.0 - mu_a * mu_a
                var_b = sbb / 9.0 - mu_b * mu_b
                cov = sab / 9.0 - mu_a * mu_b
                total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
                    (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
                )
            out[v][u] = total / channels
    return out


def recon_error(target, reconstructed, alpha: float) -> np.ndarray:
    target, reconstructed = _array(target), _array(reconstructed)
    channels, height, width = target.shape
    structure = ssim(target, reconstructed).tolist() if alpha != 0.0 else None
    target, reconstructed = target.tolist(), reconstructed.tolist()
    out = np.zeros((height, width))
    for v in range(height):
        for u in range(width):
            l1 = sum(abs(target[c][v][u] - reconstructed[c][v][u]) for c in range(channels)) / channels
            if structure is None:
                out[v][u] = l1
            else:
                out[v][u] = alpha / 2.0 * (1.0 - structure[v][u]) + (1.0 - alpha) * l1
    return out


def _filled(target: np.ndarray, warped: Warp) -> np.ndarray:
    out = warped.image.copy()
    valid = warped.valid.tolist()
    height, width = warped.valid.shape
    for v in range(height):
        for u in range(width):
            if not valid[v][u]:
                out[:, v, u] = target[:, v, u]
    return out


def semantic_mask(target_labels, warped: Warp) -> np.ndarray:
    target_labels = _labels(target_labels)
    height, width = target_labels.shape
    target_labels, labels, valid = target_labels.tolist(), warped.labels.tolist(), warped.valid.tolist()
    mask = np.zeros((height, width), dtype=bool)
    for v in range(height):
        for u in range(width):
            t, s = target_labels[v][u], labels[v][u]
            mask[v][u] = bool(valid[v][u] and t != IGNORE_LABEL and s != IGNORE_LABEL and t != s)
    return mask


class ReprojectionErrors(NamedTuple):
    warped: List[np.ndarray]
    identity: List[np.ndarray]


def reprojection_errors(target, warps: Sequence[Warp], sources: Sequence, alpha: float) -> ReprojectionErrors:
    """Per-pixel error of every warped source and of every unwarped source against the target."""
    target = _array(target)
    return ReprojectionErrors(
        warped=[recon_error(target, _filled(target, w), alpha) for w in warps],
        identity=[recon_error(target, _array(s), alpha) for s in sources],
    )


class ImageTerm(NamedTuple):
    value: float
    mu: np.ndarray
    keep: np.ndarray


def image_loss(
    target,
    warps: Sequence[Warp],
    sources: Sequence,
    masks: Optional[Sequence[np.ndarray]],
    b: float,
    alpha: float,
    use_automask: bool = True,
    errors: Optional[ReprojectionErrors] = None,
) -> ImageTerm:
    """Semantically masked minimum reprojection with the auto-mask gate."""
    errors = errors or reprojection_errors(target, warps, sources, alpha)
    height, width = errors.identity[0].shape
    re = [e.tolist() for e in errors.warped]
    identity = [e.tolist() for e in errors.identity]
    valid = [w.valid.tolist() for w in warps]
    penalised = [m.tolist() for m in masks] if masks is not None else None
    mu = np.zeros((height, width), dtype=bool)
    keep = np.zeros((height, width), dtype=bool)
    total, count = 0.0, 0
    for v in range(height):
        for u in range(width):
            best = best_re = math.inf
            for s in range(len(warps)):
                if not valid[s][v][u]:
                    continue
                penalty = b if penalised is not None and penalised[s][v][u] else 0.0
                best = min(best, re[s][v][u] + penalty)
                best_re = min(best_re, re[s][v][u])
            best_identity = min(identity[s][v][u] for s in range(len(identity)))
            mu[v][u] = best_re < best_identity
            any_valid = best < math.inf
            kept = any_valid and (best < best_identity if use_automask else True)
            keep[v][u] = kept
            if kept:
                total += best
                count += 1
    return ImageTerm(value=total / count if count else 0.0, mu=mu, keep=keep)


def semantic_loss(target_labels, warps: Sequence[Warp]) -> float:
    target_labels = _labels(target_labels)
    height, width = target_labels.shape
    target_labels = target_labels.tolist()
    labels = [w.labels.tolist() for w in warps]
    valid = [w.valid.tolist() for w in warps]
    total, count = 0.0, 0
    for v in range(height):
        for u in range(width):
            t = target_labels[v][u]
            if t == IGNORE_LABEL:
                continue
            values = [
                0.0 if labels[s][v][u] == t else 1.0
                for s in range(len(warps))
                if valid[s][v][u] and labels[s][v][u] != IGNORE_LABEL
            ]
            if values:
                total += min(values)
                count += 1
    return total / count if count else 0.0


class RoadTerm(NamedTuple):
    value: float
    surrogate: float
    count: int


def road_ordering(depth, labels, road_class_ids: Sequence[int]) -> RoadTerm:
    depth, labels = _array(depth), _labels(labels)
    height, width = depth.shape
    depth, labels = depth.tolist(), labels.tolist()
    count, hinge = 0, 0.0
    for v in range(1, height):
        for u in range(width):
            if labels[v][u] in road_class_ids and labels[v - 1][u] in road_class_ids:
                step = depth[v][u] - depth[v - 1][u]
                if step > 0:
                    count += 1
                    hinge += step
    n = height * width
    return RoadTerm(value=count / n, surrogate=hinge / n, count=count)


def smoothness(depth, image) -> float:
    depth, image = _array(depth), _array(image)
    channels, height, width = image.shape
    depth, image = depth.tolist(), image.tolist()
    total = 0.0
    for v in range(height):
        for u in range(width):
            if u < width - 1:
                grad_i = sum(abs(image[c][v][u + 1] - image[c][v][u]) for c in range(channels)) / channels
                total += abs(depth[v][u + 1] - depth[v][u]) * math.exp(-grad_i)
            if v < height - 1:
                grad_i = sum(abs(image[c][v + 1][u] - image[c][v][u]) for c in range(channels)) / channels
                total += abs(depth[v + 1][u] - depth[v][u]) * math.exp(-grad_i)
    return total / (height * width)


def point_loss(K, depth_target, depth_sources, poses, masks: Optional[Sequence[np.ndarray]], h: float) -> float:
    """Masked 3D point loss: L1 between a pixel's point and its source correspondence carried back."""
    depth_target = _array(depth_target)
    depth_sources = [_array(d)[None].tolist() for d in depth_sources]
    poses = [_pose(p) for p in poses]
    masks = [m.tolist() for m in masks] if masks is not None else None
    height, width = depth_target.shape
    depth_target = depth_target.tolist()
    total, count = 0.0, 0
    for v in range(height):
        for u in range(width):
            d = depth_target[v][u]
            point = [(u - K.cx) / K.fx * d, (v - K.cy) / K.fy * d, d]
            best = math.inf
            for s, pose in enumerate(poses):
                su, sv, in_front = project_point(K, pose, float(u), float(v), d)
                (ds,), inside = bilinear(depth_sources[s], su, sv)
                if not (inside and in_front):
                    continue
                source_point = [(su - K.cx) / K.fx * ds, (sv - K.cy) / K.fy * ds, ds]
                shifted = [source_point[r] - pose.t[r] for r in range(3)]
                back = [sum(pose.R[c][r] * shifted[c] for c in range(3)) for r in range(3)]
                error = sum(abs(point[r] - back[r]) for r in range(3))
                penalty = h if masks is not None and masks[s][v][u] else 0.0
                best = min(best, error + penalty)
            if best < h:
                total += best
                count += 1
    return total / count if count else 0.0


class TotalTerms(NamedTuple):
    img: float
    ss: float
    point3d: float
    road: float
    smooth: float
    total: float


def total_loss(
    inputs: SnippetInputs,
    weights: LossWeights,
    terms: LossTerms,
    warps: Optional[Sequence[Warp]] = None,
    errors: Optional[ReprojectionErrors] = None,
) -> TotalTerms:
    """Weighted objective; warps and reprojection errors already computed for these inputs may be passed in."""
    K = inputs.K
    if warps is None:
        warps = [
            warp(K, image, labels, inputs.target_depth, pose)
            for image, labels, pose in zip(inputs.source_images, inputs.source_labels, inputs.poses)
        ]
    masks = (
        [semantic_mask(inputs.target_labels, w) for w in warps]
        if terms.use_semantic_mask
        else None
    )
    img = image_loss(
        inputs.target_image,
        warps,
        inputs.source_images,
        masks,
        weights.b,
        weights.alpha,
        terms.use_automask,
        errors=errors,
    ).value
    ss = semantic_loss(inputs.target_labels, warps) if terms.use_ss else 0.0
    point3d = (
        point_loss(K, inputs.target_depth, inputs.source_depths, inputs.poses, masks, weights.h)
        if terms.use_3d
        else 0.0
    )
    road = (
        road_ordering(inputs.target_depth, inputs.target_labels, weights.road_class_ids).value
        if terms.use_road
        else 0.0
    )
    smooth = smoothness(inputs.target_depth, inputs.target_image)
    total = (
        weights.lambda_img * img
        + weights.lambda_ss * ss
        + weights.lambda_3d * point3d
        + weights.lambda_road * road
        + weights.lambda_smooth * smooth
    )
    return TotalTerms(img=img, ss=ss, point3d=point3d, road=road, smooth=smooth, total=total)
