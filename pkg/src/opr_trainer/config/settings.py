"""Pydantic-based settings for OPR Lab."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings; experiment hyperparameters live in config files instead."""

    model_config = SettingsConfigDict(
        env_prefix="OPR_",
        case_sensitive=False,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: str = Field(default="INFO", description="Logging level")

    # Output locations
    runs_dir: str = Field(default="./runs", description="Default parent directory for run outputs")

    # Checkpointing
    max_checkpoints: int = Field(default=5, ge=1, description="Maximum checkpoints kept per run")

    # Metrics
    metrics_wall_clock: bool = Field(
        default=False, description="Write wall-clock seconds into metrics records (breaks byte-identical reruns)"
    )
    hardware_log_interval: int = Field(default=10, ge=1, description="Updates between hardware samples")

    @property
    def log_format(self) -> str:
        """Log message format."""
        return "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


# Global settings instance
settings = Settings()
