"""
Data loading utilities for snippet manifests, scene configs and the class table.

This module provides functions to load and validate the on-disk inputs of
every command: JSON snippet manifests with their rasters, JSON scene and run
configurations, and the CSV class table.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import pandas as pd
import torch
from pydantic import ValidationError

from src.data.poses import read_intrinsics, read_poses
from src.data.rasters import read_f32, read_pgm_labels, read_ppm
from src.exceptions import DimensionMismatchError, ManifestError, RasterFormatError
from src.models.camera import Intrinsics
from src.models.evaluation import Trajectory
from src.models.losses import NUM_CLASSES
from src.models.manifest import SnippetManifest
from src.models.scene import SceneSpec
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

DEFAULT_CLASS_TABLE = Path(__file__).resolve().parents[2] / "config" / "classes.csv"


class LoadedSnippet(NamedTuple):
    manifest: SnippetManifest
    K: Intrinsics
    images: List[torch.Tensor]
    labels: List[torch.Tensor]
    depths: Optional[List[torch.Tensor]]
    gt_trajectory: Optional[Trajectory]


def _read_json(filepath: Path, what: str) -> Dict[str, Any]:
    if not filepath.exists():
        raise FileNotFoundError(f"{what} not found: {filepath}")
    try:
        return json.loads(filepath.read_text())
    except json.JSONDecodeError as e:
        raise ManifestError(f"{filepath}: invalid JSON ({e})") from e


class ManifestLoader:
    """
    Loader for snippet manifests.

    A manifest is a JSON file listing frames (image, labels, optional depth),
    the intrinsics file, an optional ground-truth pose file and the snippet
    length. Paths are relative to the manifest's directory.

    Example:
        >>> loader = ManifestLoader()
        >>> snippet = loader.load_snippet("outputs/scene/manifest.json")
        >>> len(snippet.images)
        3
    """

    def load_manifest(self, filepath: str | Path) -> Tuple[SnippetManifest, Path]:
        """
        Parse and validate a manifest file.

        Returns:
            Tuple of (SnippetManifest, base directory)

        Raises:
            FileNotFoundError: If the manifest doesn't exist
            ManifestError: If the manifest is malformed or references missing files
        """
        filepath = Path(filepath)
        data = _read_json(filepath, "manifest")
        try:
            manifest = SnippetManifest(**data)
        except (ValidationError, TypeError) as e:
            raise ManifestError(f"{filepath}: {e}") from e

        base = filepath.parent
        referenced = [manifest.intrinsics]
        if manifest.gt_poses:
            referenced.append(manifest.gt_poses)
        for frame in manifest.frames:
            referenced.extend(p for p in (frame.image, frame.labels, frame.depth) if p)
        missing = [p for p in referenced if not manifest.resolve(base, p).exists()]
        if missing:
            raise ManifestError(f"{filepath}: missing files {missing}")
        return manifest, base

    def load_snippet(self, filepath: str | Path) -> LoadedSnippet:
        """
        Load every raster of a manifest and check their dimensions.

        Raises:
            ManifestError: missing files
            RasterFormatError: malformed rasters
            DimensionMismatchError: rasters of different sizes
        """
        manifest, base = self.load_manifest(filepath)
        K = read_intrinsics(manifest.resolve(base, manifest.intrinsics))

        images, labels, depths = [], [], []
        for frame in manifest.frames:
            images.append(read_ppm(manifest.resolve(base, frame.image)))
            labels.append(read_pgm_labels(manifest.resolve(base, frame.labels)))
            if frame.depth:
                depths.append(read_f32(manifest.resolve(base, frame.depth)))

        size = tuple(images[0].shape[-2:])
        for name, rasters in (("image", images), ("label map", labels), ("depth", depths)):
            for index, raster in enumerate(rasters):
                if tuple(raster.shape[-2:]) != size:
                    raise DimensionMismatchError(
                        f"{filepath}: {name} of frame {index} is {tuple(raster.shape[-2:])}, expected {size}"
                    )
        if min(size) < 8:
            raise DimensionMismatchError(f"{filepath}: frames must be at least 8x8, got {size}")

        gt = None
        if manifest.gt_poses:
            gt = read_poses(manifest.resolve(base, manifest.gt_poses))
            if len(gt) != len(manifest.frames):
                raise ManifestError(f"{filepath}: {len(gt)} poses for {len(manifest.frames)} frames")

        logger.info(f"Loaded snippet of {len(images)} frames ({size[1]}x{size[0]}) from {filepath}")
        return LoadedSnippet(
            manifest=manifest,
            K=K,
            images=images,
            labels=labels,
            depths=depths if manifest.has_depth else None,
            gt_trajectory=gt,
        )


def load_scene_spec(filepath: str | Path) -> SceneSpec:
    """Load a JSON scene configuration."""
    filepath = Path(filepath)
    data = _read_json(filepath, "scene config")
    try:
        return SceneSpec(**data)
    except (ValidationError, TypeError) as e:
        raise ManifestError(f"{filepath}: {e}") from e


def load_run_overrides(filepath: Optional[str | Path]) -> Dict[str, Any]:
    """JSON run configuration overrides (empty when no file is given)."""
    if filepath is None:
        return {}
    filepath = Path(filepath)
    data = _read_json(filepath, "run config")
    if not isinstance(data, dict):
        raise ManifestError(f"{filepath}: run config must be a JSON object")
    return data


def load_class_table(filepath: str | Path = DEFAULT_CLASS_TABLE) -> pd.DataFrame:
    """
    Load the class table.

    Expected columns:
        id, name, is_road

    Returns:
        DataFrame indexed by class id

    Raises:
        RasterFormatError: missing columns or ids outside 0-18
    """
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"class table not found: {filepath}")
    df = pd.read_csv(filepath)

    required_cols = ["id", "name", "is_road"]
    missing_cols = [col for col in required_cols if col not in df.columns]
    if missing_cols:
        raise RasterFormatError(f"{filepath}: missing required columns: {missing_cols}")
    if not df["id"].between(0, NUM_CLASSES - 1).all() or df["id"].duplicated().any():
        raise RasterFormatError(f"{filepath}: class ids must be unique and within 0-{NUM_CLASSES - 1}")

    df["is_road"] = df["is_road"].astype(bool)
    return df.set_index("id").sort_index()


def road_class_ids(table: pd.DataFrame) -> Tuple[int, ...]:
    """Ids of the classes forming the road set."""
    return tuple(int(i) for i in table.index[table["is_road"]])
