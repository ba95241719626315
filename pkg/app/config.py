"""
Application configuration management using environment variables.
"""
from pathlib import Path
from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

DATA_DIR = Path(__file__).parent / "data"
TEMPLATE_DIR = Path(__file__).parent / "templates"


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        populate_by_name=True,
        extra="ignore",
    )

    # =============================================================================
    # Data locations
    # =============================================================================

    golden_path: Path = Field(default=DATA_DIR / "golden_tables.csv", alias="SHIMURA_GOLDEN_PATH")
    override_path: Optional[Path] = Field(default=None, alias="SHIMURA_OVERRIDE_PATH")
    output_dir: Path = Field(default=Path("output"), alias="SHIMURA_OUTPUT_DIR")

    # =============================================================================
    # Arithmetic knobs
    # =============================================================================

    # "class_number" is C(F) = 1/h(F); "half_class_number" is the alternative 1/(2h(F))
    elliptic_constant: Literal["class_number", "half_class_number"] = Field(
        default="class_number", alias="SHIMURA_ELLIPTIC_CONSTANT"
    )
    zeta_precision: int = Field(default=30, alias="SHIMURA_ZETA_PRECISION")

    # =============================================================================
    # Run settings
    # =============================================================================

    log_level: str = Field(default="INFO", alias="SHIMURA_LOG_LEVEL")
    workers: int = Field(default=1, alias="SHIMURA_WORKERS")
    strict_counts: bool = Field(default=False, alias="SHIMURA_STRICT_COUNTS")
    debug: bool = Field(default=False, alias="SHIMURA_DEBUG")

    def with_overrides(self, **updates) -> "Settings":
        """Copy of the settings with the non-None updates applied."""
        changes = {key: value for key, value in updates.items() if value is not None}
        return self.model_copy(update=changes)


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get the global settings instance."""
    return settings
