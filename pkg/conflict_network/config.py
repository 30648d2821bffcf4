"""
Configuration settings for the conflict-network simulator
"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Settings:
    """Application settings

    Only operational settings are read from the environment. Nothing here
    changes a simulation result; model parameters come from the YAML config.
    """

    # Tool metadata
    TOOL_NAME: str = "conflict-networks"
    TOOL_VERSION: str = "1.0.0"

    # Logging Configuration
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()
    LOG_FORMAT: str = os.getenv(
        "LOG_FORMAT", "%(asctime)s %(levelname)s %(name)s: %(message)s"
    )

    # Execution
    DEFAULT_WORKERS: int = int(os.getenv("DEFAULT_WORKERS", "1").split("#")[0].strip())

    # Model defaults
    DEFAULT_NETWORK_SCALE: float = 19.0
    DEFAULT_STRATEGY_SCALE: float = 1.0
    DEFAULT_ROUNDS: int = 1_000_000
    DEFAULT_SNAPSHOT_EVERY: int = 10_000
    UNDERFLOW_THRESHOLD: float = 1e-300

    # Classifier defaults
    THETA_S: float = 0.9
    THETA_P: float = 0.9
    HUB_FACTOR: float = 3.0
    HOMOG_MAX: float = 2.0
    TIE_TOLERANCE: float = 1e-12

    # Sweep defaults
    GRID_STEP: float = 0.1
    SEEDS_PER_POINT: int = 100

    # Output
    FLOAT_FORMAT: str = "%.17g"
    MANIFEST_FILE: str = "manifest.yaml"
    SNAPSHOT_FILE: str = "snapshots.jsonl"
    RECORDS_FILE: str = "records.jsonl"


settings = Settings()
