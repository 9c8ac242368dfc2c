"""
Configuration Module

Loads the TOML run configuration into validated pydantic models.

Resolution order:
- explicit path argument (CLI ``--config``)
- ``TINK_CONFIG`` environment variable (``.env`` is honoured via python-dotenv)
- built-in defaults (identical to ``config/tink.toml``)
"""

import logging
import os
import tomllib
from copy import deepcopy
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, ValidationError as PydanticValidationError

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)


# ============================================================================
# Section Models
# ============================================================================


class SdfConfig(BaseModel):
    resolution: int = Field(default=96, ge=8, le=256)
    padding: float = Field(default=0.01, gt=0)


class ShapePathConfig(BaseModel):
    n_itpl: int = Field(default=10, ge=1)
    max_resolution: int = Field(default=128, ge=8, le=512)
    mesh_workers: int = Field(default=4, ge=1)


class ContactConfig(BaseModel):
    threshold: float = Field(default=0.025, gt=0)
    decay: Literal["linear", "cosine"] = "linear"


class IcpConfig(BaseModel):
    max_iterations: int = Field(default=50, ge=1)
    tolerance: float = Field(default=1e-7, gt=0)
    divergence_factor: float = Field(default=10.0, gt=0)
    # source->target ICP residual below this fraction of the target mean edge length
    # counts as "same shape" and skips the landmark chain
    congruence_ratio: float = Field(default=0.05, ge=0)


class EnergyWeights(BaseModel):
    consis: float = Field(default=1.0, gt=0)
    anat: float = Field(default=0.1, ge=0)
    intp: float = Field(default=10.0, ge=0)


class AdamConfig(BaseModel):
    lr: float = Field(default=1e-2, gt=0)
    lr_final: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    wrist_lr_scale: float = Field(default=0.1, gt=0)
    beta_lr_scale: float = Field(default=1.0, gt=0)


class RefineConfig(BaseModel):
    iterations: int = Field(default=1000, ge=1)
    weights: EnergyWeights = EnergyWeights()
    adam: AdamConfig = AdamConfig()
    early_exit_window: int = Field(default=100, ge=1)
    early_exit_tolerance: float = Field(default=1e-10, ge=0)


class MokapWeights(BaseModel):
    repj: float = Field(default=1.0, gt=0)
    anat: float = Field(default=0.1, ge=0)
    intp: float = Field(default=10.0, ge=0)


class MokapConfig(BaseModel):
    iterations: int = Field(default=600, ge=1)
    weights: MokapWeights = MokapWeights()
    adam: AdamConfig = AdamConfig()
    cutoff: float = Field(default=0.1, gt=0, lt=1)


class MetricsConfig(BaseModel):
    voxel: float = Field(default=0.001, gt=0)


class SimulationConfig(BaseModel):
    dt: float = Field(default=0.002, gt=0)
    steps: int = Field(default=500, ge=1)
    repeats: int = Field(default=3, ge=1)
    gravity: float = Field(default=9.81, ge=0)
    stiffness: float = Field(default=1e4, gt=0)
    damping_ratio: float = Field(default=0.5, ge=0)
    friction: float = Field(default=0.8, ge=0)
    density: float = Field(default=500.0, gt=0)
    jitter: float = Field(default=1e-3, ge=0)
    hand_sdf_resolution: int = Field(default=48, ge=8, le=256)
    blowup_distance: float = Field(default=1.0, gt=0)
    max_samples: int = Field(default=600, ge=8)


class PipelineConfig(BaseModel):
    seed: int = Field(default=0, ge=0)
    jobs: int = Field(default=1, ge=1)


class TinkConfig(BaseModel):
    """Complete run configuration."""

    sdf: SdfConfig = SdfConfig()
    shape_path: ShapePathConfig = ShapePathConfig()
    contact: ContactConfig = ContactConfig()
    icp: IcpConfig = IcpConfig()
    refine: RefineConfig = RefineConfig()
    mokap: MokapConfig = MokapConfig()
    metrics: MetricsConfig = MetricsConfig()
    simulation: SimulationConfig = SimulationConfig()
    pipeline: PipelineConfig = PipelineConfig()

    def with_overrides(self, overrides: dict[str, Any] | None) -> "TinkConfig":
        """Return a copy with a nested override mapping merged in and re-validated."""
        if not overrides:
            return self
        merged = _deep_merge(self.model_dump(), overrides)
        return _validate(merged, source="overrides")


# ============================================================================
# Loading
# ============================================================================


def _deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    out = deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _validate(data: dict[str, Any], source: str) -> TinkConfig:
    try:
        return TinkConfig.model_validate(data)
    except PydanticValidationError as e:
        raise ConfigurationError(f"Invalid configuration in {source}: {e}") from e


def load_config(path: str | Path | None = None) -> TinkConfig:
    """Load and validate a TOML config.

    Args:
        path: Config file path. Falls back to ``TINK_CONFIG`` then to defaults.
    """
    path = path or os.getenv("TINK_CONFIG")
    if not path:
        logger.debug("No config file given, using built-in defaults")
        return TinkConfig()

    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigurationError(f"Config file not found: {config_path}")

    try:
        with config_path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"Cannot parse {config_path}: {e}") from e

    logger.info(f"Loaded config from {config_path}")
    return _validate(data, source=str(config_path))
