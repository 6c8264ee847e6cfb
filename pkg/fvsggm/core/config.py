"""
Core configuration module for fvsggm.
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Library and CLI settings loaded from FVSGGM_* environment variables.
    """
    model_config = SettingsConfigDict(
        env_prefix="FVSGGM_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    # Parallelism
    THREADS: int = 1

    # Observed-FVS learning
    ENUMERATION_CAP: int = 1_000_000
    RIDGE_SCALE: float = 1e-8

    # Latent-FVS learning
    LATENT_MAX_ITERS: int = 40
    LATENT_TOL: float = 1e-9
    INIT_MAX_HALVINGS: int = 50
    SWEEP_SEEDS: int = 3

    # Numerics
    CORRELATION_CLAMP: float = 1e-12

    # Output
    CSV_PRECISION: int = 17
    MODEL_SCHEMA_VERSION: str = "1"
    LOG_LEVEL: str = "WARNING"


settings = Settings()
