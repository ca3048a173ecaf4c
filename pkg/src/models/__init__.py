"""
Data models package for semdepth.

This package contains all Pydantic models for geometry, losses, scenes,
evaluation, fitting and run configuration.
"""

from src.models.camera import DTYPE, Intrinsics, PoseSE3
from src.models.losses import (
    ABLATION_PRESETS,
    IGNORE_LABEL,
    NUM_CLASSES,
    FrozenSelection,
    LossReport,
    LossTerms,
    LossWeights,
)
from src.models.snippet import SnippetInputs
from src.models.evaluation import AteSummary, DepthEvalResult, Trajectory
from src.models.scene import (
    Box,
    FrontoParallelPlane,
    GroundPlane,
    RenderedFrame,
    SceneSpec,
    Texture,
)
from src.models.fit import FitConfig, FitState
from src.models.manifest import FrameEntry, RunConfig, SnippetManifest
from src.models.selftest import CheckResult, SelftestReport

__all__ = [
    "DTYPE",
    "Intrinsics",
    "PoseSE3",
    "ABLATION_PRESETS",
    "IGNORE_LABEL",
    "NUM_CLASSES",
    "FrozenSelection",
    "LossReport",
    "LossTerms",
    "LossWeights",
    "SnippetInputs",
    "AteSummary",
    "DepthEvalResult",
    "Trajectory",
    "Box",
    "FrontoParallelPlane",
    "GroundPlane",
    "RenderedFrame",
    "SceneSpec",
    "Texture",
    "FitConfig",
    "FitState",
    "FrameEntry",
    "RunConfig",
    "SnippetManifest",
    "CheckResult",
    "SelftestReport",
]
