"""
Depth evaluation: median scaling and the standard error/accuracy metrics.

Ground truth may be sparse; `mask` marks pixels with a measurement. Pixels
are evaluated when the mask is set and min_depth <= gt <= cap. Predictions
are clamped to [min_depth, cap] after optional median scaling.
"""

from typing import Optional, Sequence

import numpy as np
import pandas as pd

from src.exceptions import DimensionMismatchError, EmptyEvaluationError
from src.models.evaluation import DepthEvalResult
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

MIN_DEPTH = 1e-3
DEFAULT_CAP = 80.0


def _as_array(values) -> np.ndarray:
    if hasattr(values, "detach"):
        values = values.detach().cpu().numpy()
    return np.asarray(values, dtype=np.float64)


def evaluation_mask(
    gt: np.ndarray,
    mask: Optional[np.ndarray] = None,
    cap: float = DEFAULT_CAP,
    min_depth: float = MIN_DEPTH,
) -> np.ndarray:
    """Pixels with a measurement inside [min_depth, cap]."""
    valid = np.isfinite(gt) & (gt >= min_depth) & (gt <= cap)
    if mask is not None:
        valid &= np.asarray(mask, dtype=bool)
    return valid


def median_scale(pred, gt, mask=None) -> float:
    """
    median(gt) / median(pred) over the masked pixels.

    Raises:
        EmptyEvaluationError: no masked pixel
    """
    pred = _as_array(pred)
    gt = _as_array(gt)
    if pred.shape != gt.shape:
        raise DimensionMismatchError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    valid = np.ones(gt.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not valid.any():
        raise EmptyEvaluationError("median scaling needs at least one valid pixel")
    return float(np.median(gt[valid]) / np.median(pred[valid]))


def compute_errors(gt: np.ndarray, pred: np.ndarray) -> dict:
    """Metrics over already-selected 1-D arrays."""
    thresh = np.maximum(gt / pred, pred / gt)
    a1 = (thresh < 1.25).mean()
    a2 = (thresh < 1.25 ** 2).mean()
    a3 = (thresh < 1.25 ** 3).mean()

    rmse = np.sqrt(((gt - pred) ** 2).mean())
    rmse_log = np.sqrt(((np.log(gt) - np.log(pred)) ** 2).mean())
    abs_rel = np.mean(np.abs(gt - pred) / gt)
    sq_rel = np.mean(((gt - pred) ** 2) / gt)

    return {
        "abs_rel": float(abs_rel),
        "sq_rel": float(sq_rel),
        "rmse": float(rmse),
        "rmse_log": float(rmse_log),
        "delta1": float(a1),
        "delta2": float(a2),
        "delta3": float(a3),
    }


def depth_metrics(
    pred,
    gt,
    mask=None,
    cap: float = DEFAULT_CAP,
    median_scaling: bool = False,
    min_depth: float = MIN_DEPTH,
    clamp_prediction: bool = True,
) -> DepthEvalResult:
    """
    Evaluate a predicted depth map against (sparse) ground truth.

    Args:
        pred: (H, W) predicted depth
        gt: (H, W) ground-truth depth
        mask: optional (H, W) bool marking measured pixels
        cap: maximum evaluated depth (meters)
        median_scaling: rescale the prediction by median(gt)/median(pred)
        min_depth: ground-truth floor
        clamp_prediction: clamp the prediction to [min_depth, cap]

    Returns:
        DepthEvalResult

    Raises:
        DimensionMismatchError: pred and gt shapes differ
        EmptyEvaluationError: no pixel survives the masks
    """
    pred = _as_array(pred)
    gt = _as_array(gt)
    if pred.shape != gt.shape:
        raise DimensionMismatchError(f"prediction {pred.shape} and ground truth {gt.shape} differ")

    valid = evaluation_mask(gt, mask, cap, min_depth)
    n_pixels = int(valid.sum())
    if n_pixels == 0:
        raise EmptyEvaluationError("no ground-truth pixel inside the evaluation range")

    pred_valid = pred[valid]
    gt_valid = gt[valid]
    scale = 1.0
    if median_scaling:
        scale = float(np.median(gt_valid) / np.median(pred_valid))
        pred_valid = pred_valid * scale
    if clamp_prediction:
        pred_valid = np.clip(pred_valid, min_depth, cap)

    errors = compute_errors(gt_valid, pred_valid)
    return DepthEvalResult(**errors, n_pixels=n_pixels, scale=scale)


def evaluate_depth_set(
    preds: Sequence,
    gts: Sequence,
    masks: Optional[Sequence] = None,
    cap: float = DEFAULT_CAP,
    median_scaling: bool = True,
    names: Optional[Sequence[str]] = None,
) -> pd.DataFrame:
    """
    Per-image metrics for a set of predictions.

    Returns:
        DataFrame with one row per image (index = names) and the metric
        columns plus n_pixels and scale; `.mean()` gives the set average.
    """
    if len(preds) != len(gts):
        raise DimensionMismatchError(f"{len(preds)} predictions for {len(gts)} ground-truth maps")
    names = list(names) if names is not None else [f"{i:06d}" for i in range(len(preds))]
    rows = []
    for i, (pred, gt) in enumerate(zip(preds, gts)):
        mask = None if masks is None else masks[i]
        result = depth_metrics(pred, gt, mask, cap=cap, median_scaling=median_scaling)
        rows.append(result.model_dump())

    df = pd.DataFrame(rows, index=pd.Index(names, name="image"))
    if median_scaling and len(df) > 1:
        ratios = df["scale"].to_numpy()
        logger.info(f"Scaling ratios | med: {np.median(ratios):.3f} | std: {np.std(ratios / np.median(ratios)):.3f}")
    return df
