"""
Snippet manifest and run configuration models.
"""

from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from src.config import Settings
from src.models.losses import ABLATION_PRESETS, LossTerms, LossWeights


class FrameEntry(BaseModel):
    """
    Files of one frame, relative to the manifest directory.

    Attributes:
        image: PPM image
        labels: PGM label map
        depth: Optional F32 ground-truth depth
    """

    image: str = Field(..., min_length=1)
    labels: str = Field(..., min_length=1)
    depth: Optional[str] = None


class SnippetManifest(BaseModel):
    """
    A snippet on disk.

    Attributes:
        frames: Ordered frame entries (at least two)
        intrinsics: Intrinsics text file ("fx fy cx cy")
        gt_poses: Optional camera-to-world pose file (12 values per line)
        snippet_length: Evaluation window length (3 or 5)

    Example:
        >>> manifest = SnippetManifest(
        ...     frames=[FrameEntry(image="f0.ppm", labels="f0.pgm"),
        ...             FrameEntry(image="f1.ppm", labels="f1.pgm")],
        ...     intrinsics="intrinsics.txt",
        ... )
    """

    frames: List[FrameEntry] = Field(..., min_length=2)
    intrinsics: str
    gt_poses: Optional[str] = None
    snippet_length: Literal[3, 5] = 3

    def resolve(self, base: Path, relative: str) -> Path:
        path = Path(relative)
        return path if path.is_absolute() else base / path

    @property
    def has_depth(self) -> bool:
        return all(frame.depth is not None for frame in self.frames)


class RunConfig(BaseModel):
    """
    Configuration a command runs with.

    Attributes:
        weights: Loss weights
        terms: Ablation switches
        depth_cap: Maximum depth (meters)
        output_dir: Where outputs are written
        seed: Random seed
    """

    weights: LossWeights = Field(default_factory=LossWeights)
    terms: LossTerms = Field(default_factory=LossTerms)
    depth_cap: float = Field(default=80.0, gt=0.0)
    output_dir: str = "outputs"
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_penalties(self) -> "RunConfig":
        self.weights.check_depth_cap(self.depth_cap)
        return self

    @classmethod
    def from_settings(
        cls,
        settings: Settings,
        ablation: Optional[str] = None,
        overrides: Optional[dict] = None,
    ) -> "RunConfig":
        """
        Settings first, then an optional JSON config dict, then an ablation preset.

        Raises:
            KeyError: unknown ablation preset
            pydantic.ValidationError: invalid values
        """
        overrides = dict(overrides or {})
        weight_values = {**settings.get_loss_weight_config(), **overrides.pop("weights", {})}
        term_values = overrides.pop("terms", {})
        if ablation is not None:
            if ablation not in ABLATION_PRESETS:
                raise KeyError(f"unknown ablation preset '{ablation}', choose from {sorted(ABLATION_PRESETS)}")
            term_values = {**term_values, **ABLATION_PRESETS[ablation].model_dump()}
        return cls(
            weights=LossWeights(**weight_values),
            terms=LossTerms(**term_values),
            depth_cap=overrides.pop("depth_cap", settings.depth_cap),
            output_dir=overrides.pop("output_dir", settings.output_dir),
            seed=overrides.pop("seed", settings.seed),
            **overrides,
        )
