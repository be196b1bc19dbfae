"""Application configuration settings."""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables.

    Attributes:
        PROJECT_NAME: Name of the project
        API_V1_STR: API version prefix
        OUTPUT_DIR: Default directory for traces, snapshots and tables
        LOG_LEVEL: Root logging level for the CLI and the API
        MAX_WORKERS: Threads used to run independent convergence runs
        BLOWUP_EXPONENT: Largest |ln R - E/S| accepted before a step aborts
        API_MAX_STEPS: Largest number of time steps a single HTTP run may take
    """

    PROJECT_NAME: str = "E-SAV Gradient Flow Solver"
    API_V1_STR: str = "/api/v1"
    # Override with OUTPUT_DIR=/some/where; --output-dir and the config file win over it
    OUTPUT_DIR: str = "results"
    LOG_LEVEL: str = "INFO"
    MAX_WORKERS: int = 1
    BLOWUP_EXPONENT: float = 30.0
    API_MAX_STEPS: int = 20000

    model_config = SettingsConfigDict(
        case_sensitive=True,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore"
    )


settings = Settings()
