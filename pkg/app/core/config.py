from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    REDIS_URL: str = "redis://localhost:6379/0"
    LOG_LEVEL: str = "INFO"

    # Enumeration caps
    PERFECTNESS_CAP: int = 24
    STABLE_SET_CAP: int = 30
    HSTAB_CAP: int = 20
    EMBEDDING_NODE_BUDGET: int = 200_000

    # Theta SDP
    THETA_MAX_VERTICES: int = 60
    THETA_TOLERANCE: float = 1e-6
    THETA_MAX_ITERATIONS: int = 60_000
    REPORT_DIGITS: int = 5

    # Classification
    CHAIN_TOLERANCE: float = 1e-5
    GENUINE_MARGIN: float = 1e-4

    # Optimizer / search
    OPTIMIZER_RESTARTS: int = 20
    WORKERS: int = 1
    SEARCH_BUDGET_SECS: float = 600.0

    class Config:
        env_file = '.env'
        extra = 'ignore'


settings = Settings()
