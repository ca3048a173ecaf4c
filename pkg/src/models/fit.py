"""
Direct-fit configuration and state models.
"""

from typing import Dict, List, Literal, Optional

import torch
from pydantic import BaseModel, ConfigDict, Field

from src.models.camera import PoseSE3
from src.models.evaluation import Trajectory
from src.models.losses import LossTerms, LossWeights


class FitConfig(BaseModel):
    """
    Settings of one direct fit.

    Attributes:
        weights: Loss weights
        terms: Ablation switches
        max_iterations: Alternating sweeps (one depth step and one pose step each)
        depth_step: Initial per-pixel step of the depth block, in log2-depth units
        pose_step: Length of the first pose step, in param6 units
        tolerance: Stop when the relative objective decrease over a refresh period falls below this
        gradient_mode: "analytic" (autograd) or "finite-difference"
        mask_refresh_period: Sweeps between mask refreezes
        optimize_depth: Update the depth block
        optimize_pose: Update the pose block
        target_frames: "all" uses every frame as target, "reference" the middle frame only
        point_warmup_sweeps: Sweeps fitted without the 3D point term before it joins
        max_backtracks: Step halvings tried before a line search gives up
        step_tolerance: A line search that fails down to this fraction of the
            proposed step leaves its block stationary
    """

    model_config = ConfigDict(frozen=True)

    weights: LossWeights = Field(default_factory=LossWeights)
    terms: LossTerms = Field(default_factory=LossTerms)
    max_iterations: int = Field(default=500, ge=0)
    depth_step: float = Field(default=0.05, gt=0.0)
    pose_step: float = Field(default=0.01, gt=0.0)
    tolerance: float = Field(default=1e-9, gt=0.0)
    gradient_mode: Literal["analytic", "finite-difference"] = "analytic"
    mask_refresh_period: int = Field(default=10, ge=1)
    optimize_depth: bool = True
    optimize_pose: bool = True
    target_frames: Literal["all", "reference"] = "all"
    point_warmup_sweeps: int = Field(default=100, ge=0)
    max_backtracks: int = Field(default=30, ge=1)
    step_tolerance: float = Field(default=1e-8, gt=0.0)

    @classmethod
    def from_config(cls, config: dict, **overrides) -> "FitConfig":
        """Build from Settings.get_fit_config() output."""
        return cls(**{**config, **overrides})


class FitState(BaseModel):
    """
    Optimisation variables and progress of a fit.

    Depth is stored as log2-depth so it stays positive; poses are the
    param6 vectors of the adjacent pairs T_{k->k+1}.

    Attributes:
        log_depth: (N, H, W) log2 depth per frame
        pose_params: (N-1, 6) param6 per adjacent pair
        iteration: Completed sweeps
        history: One row of loss terms and step sizes per sweep
        halted: Diagnostic when the fit stopped on a loss increase
        converged: No descent step remained, or the relative decrease over
            a refresh period fell below tolerance
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    log_depth: torch.Tensor
    pose_params: torch.Tensor
    iteration: int = 0
    history: List[Dict[str, float]] = Field(default_factory=list)
    halted: Optional[str] = None
    converged: bool = False

    @property
    def num_frames(self) -> int:
        return int(self.log_depth.shape[0])

    def depths(self) -> torch.Tensor:
        return torch.exp2(self.log_depth)

    def adjacent_poses(self) -> List[PoseSE3]:
        from src.geometry.se3 import exp6

        return [exp6(p) for p in self.pose_params]

    def trajectory(self) -> Trajectory:
        """Camera-to-world trajectory with the first frame at the origin."""
        from src.metrics.trajectory import trajectory_from_adjacent

        return trajectory_from_adjacent([p.detached() for p in self.adjacent_poses()])

    def snapshot(self) -> "FitState":
        return FitState(
            log_depth=self.log_depth.detach().clone(),
            pose_params=self.pose_params.detach().clone(),
            iteration=self.iteration,
            history=list(self.history),
            halted=self.halted,
            converged=self.converged,
        )
