"""
Configuration settings for the DOPING augmentation toolkit.

Two layers: ``AppSettings`` comes from the environment (``DOPING_`` prefix,
``.env`` supported) and ``RunConfig`` is the JSON run configuration whose
every field has a default. Command-line flags override the config file,
which overrides the defaults.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..aae.model import AaeSetup, AaeTrainConfig
from ..aae.priors import Prior, RingPrior, prior_from_dict
from ..augment.augmenters import AugmenterKind, parse_augmenter
from ..detect.isolation_forest import DetectorConfig
from ..eval.experiments import parse_radii, resolve_n_synth
from ..eval.metrics import SweepGrid
from ..exceptions import ConfigError

logger = logging.getLogger(__name__)

PRIOR_KINDS = ("gaussian", "generalized_gaussian", "ring")


class AppSettings(BaseSettings):
    """Process-level settings read from the environment."""

    config: Optional[str] = Field(None)
    log_level: str = Field("INFO")
    jobs: int = Field(1)
    output_dir: str = Field("./runs")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        if v.upper() not in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
            raise ValueError("Invalid log level")
        return v.upper()

    @field_validator("jobs")
    @classmethod
    def validate_jobs(cls, v):
        if v < 1:
            raise ValueError("Jobs must be at least 1")
        return v

    model_config = SettingsConfigDict(
        env_prefix="DOPING_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )


class PriorSection(BaseModel):
    """Latent prior; only the parameters of ``kind`` are used."""

    kind: str = Field("gaussian")
    sigma: float = Field(10.0, gt=0)
    mu: float = Field(0.0)
    alpha: float = Field(10.0, gt=0)
    beta: float = Field(2.0, gt=0)
    radius: float = Field(100.0, gt=0)

    model_config = ConfigDict(extra="forbid")

    @field_validator("kind")
    @classmethod
    def validate_kind(cls, v):
        if v not in PRIOR_KINDS:
            raise ValueError(f"Prior kind must be one of {PRIOR_KINDS}")
        return v

    def build(self, dim: int) -> Prior:
        return prior_from_dict({
            "kind": self.kind, "dim": dim, "sigma": self.sigma,
            "mu": self.mu, "alpha": self.alpha, "beta": self.beta, "radius": self.radius
        })


class AaeSection(BaseModel):
    hidden: int = Field(64, ge=1)
    latent_dim: int = Field(2, ge=1)
    prior: PriorSection = Field(default_factory=PriorSection)
    steps: int = Field(2000, ge=1)
    epochs: Optional[int] = Field(None, ge=1)
    batch: int = Field(100, ge=1)
    lr: float = Field(1e-4, gt=0)
    labeled_lr: float = Field(1e-3, gt=0)
    anomaly_share: float = Field(0.5, gt=0, lt=1)
    seed: int = Field(0)
    labeled: bool = Field(False)
    anomaly_radius: float = Field(100.0, gt=0)

    model_config = ConfigDict(extra="forbid")

    def train_config(self, progress: bool = False) -> AaeTrainConfig:
        return AaeTrainConfig(
            epochs=self.epochs,
            steps=self.steps,
            batch_size=self.batch,
            lr=self.lr,
            labeled_lr=self.labeled_lr,
            anomaly_share=self.anomaly_share,
            hidden_units=self.hidden,
            latent_dim=self.latent_dim,
            seed=self.seed,
            labeled=self.labeled,
            progress=progress
        )

    def setup(self, progress: bool = False) -> AaeSetup:
        anomaly_prior = RingPrior(self.latent_dim, self.anomaly_radius) if self.labeled else None
        return AaeSetup(self.train_config(progress), self.prior.build(self.latent_dim), anomaly_prior)


class SweepSection(BaseModel):
    grid: SweepGrid = Field(default_factory=SweepGrid)
    radii: str = Field("5:100:5")
    seeds: List[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5])
    tpr_target: float = Field(0.8, gt=0, le=1)

    model_config = ConfigDict(extra="forbid")

    @field_validator("radii")
    @classmethod
    def validate_radii(cls, v):
        parse_radii(v)
        return v

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v):
        if not v:
            raise ValueError("At least one seed is required")
        return v

    def radii_values(self) -> List[float]:
        return parse_radii(self.radii)


class AugmentSection(BaseModel):
    method: str = Field("doping")
    n_synth: Union[int, str] = Field("10%")
    noise_fraction: float = Field(0.1, ge=0, le=1)

    model_config = ConfigDict(extra="forbid")

    @field_validator("method")
    @classmethod
    def validate_method(cls, v):
        parse_augmenter(v)
        return v

    @field_validator("n_synth")
    @classmethod
    def validate_n_synth(cls, v):
        resolve_n_synth(v, 100)
        return v

    def augmenter(self) -> AugmenterKind:
        return parse_augmenter(self.method, self.noise_fraction)


class RunConfig(BaseModel):
    """Everything an experiment run depends on."""

    aae: AaeSection = Field(default_factory=AaeSection)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    sweep: SweepSection = Field(default_factory=SweepSection)
    augment: AugmentSection = Field(default_factory=AugmentSection)

    model_config = ConfigDict(extra="forbid")

    def with_overrides(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Apply dotted-key overrides such as ``{"aae.steps": 500}``; None values are skipped."""
        data = self.model_dump()
        for key, value in overrides.items():
            if value is None:
                continue
            node = data
            *parents, leaf = key.split(".")
            for part in parents:
                if part not in node or not isinstance(node[part], dict):
                    raise ConfigError(f"Unknown config key: {key}")
                node = node[part]
            if leaf not in node:
                raise ConfigError(f"Unknown config key: {key}")
            node[leaf] = value
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid override: {e}") from e


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Read a JSON run config; missing sections and fields take their defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        config = RunConfig.model_validate(data)
        logger.debug(f"Loaded run config from {path}")
        return config
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid config file {path}: {e}") from e


def get_settings() -> AppSettings:
    """Get application settings instance."""
    return AppSettings()


# Global settings instance
settings = get_settings()
