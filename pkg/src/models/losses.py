"""
Loss configuration and report models.

LossWeights carries the weights of the total loss and the two mask
penalties; LossTerms holds the ablation switches; LossReport is what
total_loss returns for one target frame.
"""

from typing import Dict, Optional, Tuple

import torch
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

# Label value excluded from the semantic terms.
IGNORE_LABEL = 255

NUM_CLASSES = 19


class LossWeights(BaseModel):
    """
    Weights and constants of the total loss.

    Attributes:
        lambda_img: Masked image reconstruction weight
        lambda_ss: Semantic reconstruction weight
        lambda_3d: 3D point loss weight
        lambda_road: Road ordering weight
        lambda_smooth: Edge-aware smoothness weight
        alpha: SSIM share of the reconstruction error
        b: Photometric mask penalty, must exceed every attainable re (re <= 1)
        h: 3D mask penalty and selection threshold (meters)
        road_class_ids: Class ids forming the road set of the ordering prior

    Example:
        >>> weights = LossWeights()
        >>> weights.lambda_smooth
        0.001
    """

    model_config = ConfigDict(frozen=True)

    lambda_img: float = Field(default=1.0, ge=0.0)
    lambda_ss: float = Field(default=0.1, ge=0.0)
    lambda_3d: float = Field(default=0.1, ge=0.0)
    lambda_road: float = Field(default=0.1, ge=0.0)
    lambda_smooth: float = Field(default=0.001, ge=0.0)

    alpha: float = Field(default=0.85, ge=0.0, le=1.0, description="SSIM mix weight")
    b: float = Field(default=10.0, gt=1.0, description="Photometric mask penalty")
    h: float = Field(default=320.0, gt=0.0, description="3D mask penalty / threshold (m)")

    road_class_ids: Tuple[int, ...] = Field(default=(0, 1), description="Road and sidewalk ids")

    @model_validator(mode="after")
    def validate_road_ids(self) -> "LossWeights":
        for class_id in self.road_class_ids:
            if not 0 <= class_id < NUM_CLASSES:
                raise ValueError(f"road class id {class_id} outside [0, {NUM_CLASSES - 1}]")
        return self

    def check_depth_cap(self, depth_cap: float) -> None:
        """Raise ValueError unless h exceeds the largest attainable point error (3 x cap)."""
        if self.h <= 3.0 * depth_cap:
            raise ValueError(
                f"h={self.h} must exceed the attainable point error 3 x depth_cap = {3.0 * depth_cap}"
            )

    @classmethod
    def from_config(cls, config: dict, **overrides) -> "LossWeights":
        """Build from Settings.get_loss_weight_config() output."""
        return cls(**{**config, **overrides})


class LossTerms(BaseModel):
    """
    Ablation switches. A disabled term is not evaluated and reports 0.

    use_semantic_mask=False turns the masked image loss into the plain
    minimum reprojection loss (M = 0) and disables the 3D mask likewise.
    """

    model_config = ConfigDict(frozen=True)

    use_ss: bool = True
    use_road: bool = True
    use_3d: bool = True
    use_semantic_mask: bool = True
    use_automask: bool = True


ABLATION_PRESETS: Dict[str, LossTerms] = {
    "img": LossTerms(use_ss=False, use_road=False, use_3d=False, use_semantic_mask=False),
    "img+ss": LossTerms(use_ss=True, use_road=False, use_3d=False),
    "img+ss+road": LossTerms(use_ss=True, use_road=True, use_3d=False),
    "img+3d": LossTerms(use_ss=False, use_road=False, use_3d=True, use_semantic_mask=False),
    "full": LossTerms(),
}


class FrozenSelection(BaseModel):
    """
    Discrete selections held constant while a fit differentiates the loss.

    Attributes:
        semantic_masks: (S, H, W) bool, M per source
        image_selected: (H, W) index of the source chosen by the image loss
        image_keep: (H, W) bool, pixels surviving the image-loss gate
        point_selected: (H, W) index of the source chosen by the 3D loss
        point_keep: (H, W) bool, pixels surviving the 3D threshold
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    semantic_masks: torch.Tensor
    image_selected: torch.Tensor
    image_keep: torch.Tensor
    point_selected: Optional[torch.Tensor] = None
    point_keep: Optional[torch.Tensor] = None


class LossReport(BaseModel):
    """
    Per-term values of the total loss for one target frame.

    `total` uses the hard road violation count; the differentiable
    `objective` uses the hinge surrogate of the same term. Per-pixel maps
    (re, mre, identity_re, pe, mpe, mu, M, selected, selected_3d) are kept
    for reports and visualisation but never serialised.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    img: float = 0.0
    ss: float = 0.0
    point3d: float = 0.0
    road: float = 0.0
    smooth: float = 0.0
    total: float = 0.0

    road_count: int = 0
    road_surrogate: float = 0.0
    kept_pixels: int = 0
    masked_pixels: int = 0
    valid_pixels: int = 0

    weights: LossWeights = Field(default_factory=LossWeights)
    terms: LossTerms = Field(default_factory=LossTerms)

    maps: Dict[str, torch.Tensor] = Field(default_factory=dict, exclude=True)

    _objective: Optional[torch.Tensor] = PrivateAttr(default=None)
    _selection: Optional[FrozenSelection] = PrivateAttr(default=None)

    @property
    def objective(self) -> torch.Tensor:
        """Differentiable scalar that fitting minimises."""
        if self._objective is None:
            return torch.tensor(self.total, dtype=torch.float64)
        return self._objective

    @property
    def selection(self) -> Optional[FrozenSelection]:
        return self._selection

    def attach(self, objective: torch.Tensor, selection: FrozenSelection) -> "LossReport":
        self._objective = objective
        self._selection = selection
        return self

    def term_values(self) -> Dict[str, float]:
        return {
            "L_img": self.img,
            "L_ss": self.ss,
            "L_3d": self.point3d,
            "L_road": self.road,
            "L_smooth": self.smooth,
            "total": self.total,
        }

    def __str__(self) -> str:
        return (
            f"LossReport(total={self.total:.6g}, img={self.img:.6g}, ss={self.ss:.6g}, "
            f"3d={self.point3d:.6g}, road={self.road:.6g}, smooth={self.smooth:.6g})"
        )
