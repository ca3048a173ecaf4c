"""
Report writers: JSON and aligned-column text reports, convergence logs and
colour-mapped visualisations.

Every writer returns bytes so commands can assemble all outputs in memory
before anything touches the disk.
"""

import json
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import pandas as pd
import torch
from matplotlib import colormaps

from src.data.rasters import encode_ppm
from src.models.evaluation import AteSummary, DepthEvalResult
from src.models.losses import LossReport

SCHEMA_VERSION = 1


def to_json(payload: Dict[str, Any]) -> bytes:
    """Deterministic JSON (sorted keys, fixed indentation)."""
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def loss_report_payload(report: LossReport, **extra: Any) -> Dict[str, Any]:
    payload = {
        "schema": SCHEMA_VERSION,
        "kind": "loss",
        "terms": report.term_values(),
        "road_count": report.road_count,
        "road_surrogate": report.road_surrogate,
        "pixels": {
            "valid": report.valid_pixels,
            "kept": report.kept_pixels,
            "masked": report.masked_pixels,
        },
        "weights": report.weights.model_dump(mode="json"),
        "ablation": report.terms.model_dump(mode="json"),
    }
    payload.update(extra)
    return payload


def depth_report_payload(result: DepthEvalResult, per_image: Optional[pd.DataFrame] = None, **extra: Any) -> Dict[str, Any]:
    payload = {
        "schema": SCHEMA_VERSION,
        "kind": "depth",
        "metrics": result.model_dump(mode="json"),
    }
    if per_image is not None:
        payload["per_image"] = per_image.to_dict(orient="records")
    payload.update(extra)
    return payload


def ate_report_payload(summary: AteSummary, baseline: Optional[AteSummary] = None) -> Dict[str, Any]:
    payload = {
        "schema": SCHEMA_VERSION,
        "kind": "pose",
        "ate": summary.model_dump(mode="json"),
        "text": str(summary),
    }
    if baseline is not None:
        payload["baseline"] = baseline.model_dump(mode="json")
    return payload


def format_table(rows: Iterable[Dict[str, Any]], float_format: str = "{:.6f}") -> str:
    """Aligned-column text of a list of row dicts."""
    df = pd.DataFrame(list(rows))
    if df.empty:
        return ""
    return df.to_string(index=False, float_format=float_format.format) + "\n"


def loss_report_text(report: LossReport) -> str:
    rows = [{"term": key, "value": value} for key, value in report.term_values().items()]
    text = format_table(rows, "{:.9g}")
    return text + (
        f"road violations: {report.road_count}\n"
        f"valid pixels: {report.valid_pixels}  kept: {report.kept_pixels}  masked: {report.masked_pixels}\n"
    )


def convergence_log(history: List[Dict[str, float]]) -> bytes:
    """CSV log with one row per fit sweep."""
    df = pd.DataFrame(history)
    if "iteration" in df.columns:
        df["iteration"] = df["iteration"].astype(int)
    return df.to_csv(index=False, float_format="%.9g").encode("utf-8")


def colorize(values, valid=None, cmap: str = "magma", vmax: Optional[float] = None) -> np.ndarray:
    """
    Map a scalar raster to a (3, H, W) RGB image in [0, 1].

    Non-finite and invalid pixels are drawn black. The colour range is
    [0, vmax], with vmax defaulting to the largest finite valid value.
    """
    array = values.detach().cpu().numpy() if isinstance(values, torch.Tensor) else np.asarray(values, dtype=float)
    array = array.astype(np.float64)
    mask = np.isfinite(array)
    if valid is not None:
        mask &= valid.detach().cpu().numpy() if isinstance(valid, torch.Tensor) else np.asarray(valid, dtype=bool)
    if vmax is None:
        vmax = float(array[mask].max()) if mask.any() else 1.0
    vmax = vmax if vmax > 0 else 1.0

    scaled = np.clip(np.where(mask, array, 0.0) / vmax, 0.0, 1.0)
    rgb = colormaps[cmap](scaled)[..., :3]
    rgb[~mask] = 0.0
    return rgb.transpose(2, 0, 1)


def visualization_ppm(values, valid=None, cmap: str = "magma", vmax: Optional[float] = None) -> bytes:
    return encode_ppm(colorize(values, valid, cmap, vmax))
