"""Configuration management for the DEKL checker."""

from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Checker configuration settings."""

    model_config = SettingsConfigDict(env_prefix="DEKL_", env_file=".env", case_sensitive=True, extra="ignore")

    # Output
    COLOR: bool = Field(default=True, description="ANSI colour in human output")

    # Analysis bounds
    PRESHEAF_DEPTH: int = Field(default=4, ge=1, description="Default presheaf base depth")
    ADEQUACY_MAX_LEN: int = Field(default=5, ge=0, description="Default path length bound for adequacy")
    ADEQUACY_TERM_LEN: int = Field(default=6, ge=0, description="Trace term length bound for adequacy")
    OBSERVE_DEPTH: int = Field(default=50, ge=0, description="InfTrace observation depth for the corpus run")

    # Metatheory harness
    META_SEED: int = Field(default=0, ge=0, description="Default generator seed")
    META_ITERATIONS: int = Field(default=1000, ge=1, description="Default iterations per property")
    MAX_TERM_SIZE: int = Field(default=25, ge=1, description="Generator size budget")
    MAX_CTX_LEN: int = Field(default=4, ge=1, description="Generator context length bound")
    GENERATION_ATTEMPTS: int = Field(default=10_000, ge=1, description="Generator retry budget")
    CONSISTENCY_MAX_SIZE: int = Field(default=8, ge=1, description="Consistency search size used by meta")
    CONSISTENCY_SIZE_LIMIT: int = Field(default=12, ge=1, description="Largest accepted consistency search size")

    # Kernel
    NORMALIZE_FUEL: int = Field(default=1_000_000, ge=1, description="Reduction steps before an internal error")

    # File paths
    CORPUS_DIR: str = Field(default="data/corpus", description="Bundled corpus directory")

    # Logging settings
    LOG_LEVEL: str = Field(default="WARNING", description="Logging level")
    LOG_FILE: str = Field(default="", description="Optional JSON log file path")

    @field_validator("LOG_LEVEL")
    @classmethod
    def _known_level(cls, value: str) -> str:
        if value.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {value!r}")
        return value.upper()

    @property
    def corpus_path(self) -> Path:
        """Corpus directory, resolved against the repository root when relative."""
        path = Path(self.CORPUS_DIR)
        if path.is_absolute():
            return path
        return Path(__file__).resolve().parent.parent / path


# Global settings instance
settings = Settings()
