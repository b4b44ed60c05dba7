# aspem/core/config.py
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process-wide settings loaded from environment variables.

    Values come from the environment (prefix ``ASPEM_``) or a ``.env`` file in
    the working directory. Per-run parameters live in
    ``aspem.schemas.config.PipelineConfig``; these are the knobs that rarely
    change between runs.
    """
    LOG_LEVEL: str = "INFO"
    DEFAULT_WORKERS: int = 1
    # center rows per sparse block when scoring sub-aspects
    SCORE_CHUNK_SIZE: int = 2048
    CANDIDATE_EDGE_TYPE_LIMIT: int = 20
    DEFAULT_CANDIDATES: int = 100

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="ASPEM_",
        case_sensitive=True,
        extra="ignore",
    )


settings = Settings()
