"""
Configuration management for semdepth.

This module provides centralized configuration using pydantic-settings
for environment variable management and validation. Every command builds
its RunConfig from these settings, then applies file and flag overrides.
"""

from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, field_validator


class Settings(BaseSettings):
    """
    Library settings loaded from environment variables.

    All settings can be overridden via .env file or SEMDEPTH_* variables.

    Attributes:
        log_level: Logging level
        depth_cap: Maximum depth (meters) used by metrics and the 3D mask penalty
        lambda_img: Weight of the masked image reconstruction loss
        lambda_ss: Weight of the semantic reconstruction loss
        lambda_3d: Weight of the 3D point loss
        lambda_road: Weight of the road ordering loss
        lambda_smooth: Weight of the edge-aware smoothness loss
        alpha: SSIM / L1 mixing weight of the reconstruction error
        mask_penalty_b: Photometric semantic-mask penalty
        mask_penalty_h: 3D semantic-mask penalty and threshold (default 4 x depth_cap)
        max_iterations: Default fit iteration budget
        seed: Default random seed
    """

    model_config = SettingsConfigDict(
        env_prefix="SEMDEPTH_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Logging Configuration
    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)"
    )

    # Evaluation Configuration
    depth_cap: float = Field(
        default=80.0,
        description="Maximum evaluated depth (meters)",
        gt=0.0
    )

    # Loss weights
    lambda_img: float = Field(default=1.0, ge=0.0, description="Weight of L_img")
    lambda_ss: float = Field(default=0.1, ge=0.0, description="Weight of L_ss")
    lambda_3d: float = Field(default=0.1, ge=0.0, description="Weight of L_3D")
    lambda_road: float = Field(default=0.1, ge=0.0, description="Weight of L_road")
    lambda_smooth: float = Field(default=0.001, ge=0.0, description="Weight of L_smooth")

    alpha: float = Field(
        default=0.85,
        description="SSIM mix weight of the reconstruction error",
        ge=0.0,
        le=1.0
    )

    mask_penalty_b: float = Field(
        default=10.0,
        description="Photometric mask penalty (must exceed every attainable re)",
        gt=1.0
    )

    mask_penalty_h: Optional[float] = Field(
        default=None,
        description="3D mask penalty and threshold (meters); None means 4 x depth_cap",
        gt=0.0
    )

    # Fitting Configuration
    max_iterations: int = Field(
        default=500,
        description="Maximum fit iterations",
        ge=0,
        le=100000
    )

    depth_step: float = Field(default=0.05, gt=0.0, description="Initial per-pixel depth step (log2 units)")
    pose_step: float = Field(default=0.01, gt=0.0, description="Length of the first pose step (param6 units)")

    tolerance: float = Field(
        default=1e-9,
        description="Convergence tolerance on relative loss decrease",
        gt=0.0
    )

    mask_refresh_period: int = Field(
        default=10,
        description="Iterations between mask refreezes",
        ge=1
    )

    point_warmup_sweeps: int = Field(
        default=100,
        description="Sweeps fitted before the 3D point term joins",
        ge=0
    )

    init_depth: float = Field(
        default=10.0,
        description="Uniform depth initialisation (meters)",
        gt=0.0
    )

    # Runtime
    seed: int = Field(default=0, description="Random seed", ge=0)

    output_dir: str = Field(
        default="outputs",
        description="Default output directory"
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is a valid Python logging level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(
                f"Invalid log level: {v}. Must be one of {valid_levels}"
            )
        return v_upper

    def resolved_mask_penalty_h(self) -> float:
        """3D penalty h, derived from the depth cap when not set explicitly."""
        if self.mask_penalty_h is None:
            return 4.0 * self.depth_cap
        return self.mask_penalty_h

    def get_loss_weight_config(self) -> dict:
        """Get loss weight configuration."""
        return {
            "lambda_img": self.lambda_img,
            "lambda_ss": self.lambda_ss,
            "lambda_3d": self.lambda_3d,
            "lambda_road": self.lambda_road,
            "lambda_smooth": self.lambda_smooth,
            "alpha": self.alpha,
            "b": self.mask_penalty_b,
            "h": self.resolved_mask_penalty_h(),
        }

    def get_fit_config(self) -> dict:
        """Get direct-fit configuration."""
        return {
            "max_iterations": self.max_iterations,
            "depth_step": self.depth_step,
            "pose_step": self.pose_step,
            "tolerance": self.tolerance,
            "mask_refresh_period": self.mask_refresh_period,
            "point_warmup_sweeps": self.point_warmup_sweeps,
        }

    def __repr__(self) -> str:
        return (
            f"Settings("
            f"depth_cap={self.depth_cap}, "
            f"log_level={self.log_level}, "
            f"seed={self.seed}"
            f")"
        )


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """
    Get library settings (singleton pattern).

    Returns:
        Settings instance

    Example:
        >>> from src.config import get_settings
        >>> settings = get_settings()
        >>> settings.depth_cap
        80.0
    """
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reload_settings() -> Settings:
    """
    Reload settings from environment (useful for testing).

    Returns:
        New Settings instance
    """
    global _settings
    _settings = Settings()
    return _settings
