# Runtime settings for the Rademacher Stein laboratory.

from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import field_validator
from functools import lru_cache
import logging

logger = logging.getLogger(__name__)

# Dense tables hold 2^m doubles; 2^26 states is the largest size we allow.
HARD_CAP = 26


class Settings(BaseSettings):
    # Library Settings
    VERSION: str = "1.0.0"
    TITLE: str = "Rademacher Stein Lab"

    # Exact-mode coordinate cap (RSL_CAP may only lower it)
    CAP: int = HARD_CAP
    SOFT_TERMS_LIMIT: int = 16

    # Monte Carlo Settings
    THREADS: int = 1
    SHARD_SIZE: int = 16384
    DEFAULT_SAMPLES: int = 100_000
    DEFAULT_SEED: int = 20240601

    # Bound Settings
    DEFAULT_REFINE: int = 32
    J1J2_CONSTANT: float = 1.0
    HYPERCUBE_EPS: float = 0.5
    IDENTITY_RTOL: float = 1e-10
    STANDARDIZATION_TOL: float = 1e-8

    # Logging Settings
    LOG_DIR: str = "logs"
    LOG_FILE: str = "rademacher-stein.log"
    LOG_LEVEL: str = "INFO"

    @field_validator("CAP")
    @classmethod
    def clamp_cap(cls, value: int) -> int:
        """The cap can be lowered through the environment, never raised"""
        if value > HARD_CAP:
            logger.warning("RSL_CAP=%s exceeds the hard cap, using %s", value, HARD_CAP)
            return HARD_CAP
        return max(1, value)

    @field_validator("THREADS", "SHARD_SIZE")
    @classmethod
    def at_least_one(cls, value: int) -> int:
        return max(1, value)

    model_config = SettingsConfigDict(
        env_prefix="RSL_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore"
    )


@lru_cache()
def get_settings() -> Settings:
    return Settings()
