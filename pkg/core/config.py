"""Configuration settings for the solver library and CLI."""
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "console"  # Options: "json", "console"

    # Stopping rule defaults
    DEFAULT_RELCHG_THRESHOLD: float = 1e-8
    DEFAULT_MAX_ITERATIONS: int = 5000

    # Penalty schedule ("a very large constant" for alpha_max)
    DEFAULT_ALPHA_MAX: float = 1e8
    DEFAULT_ALPHA_GROWTH: float = 1.1
    # Initial penalty; the first singular-value threshold is 1/(2·alpha0)
    DEFAULT_ALPHA0: float = 1e-3

    # Synthetic data
    DEFAULT_SPARSITY: float = 0.05
    DEFAULT_MAGNITUDE: float = 50.0

    # Solver audit
    SOLVER_AUDIT_DIRECTIONS: int = 10
    SOLVER_AUDIT_TOLERANCE: float = 1e-9
    SOLVER_AUDIT_SEED: int = 20240101

    # Output
    CSV_FLOAT_DIGITS: int = 17

    class Config:
        env_file = ".env"
        case_sensitive = True


settings = Settings()
