from pydantic_settings import BaseSettings
from typing import List, Optional

class Settings(BaseSettings):
    # App Config
    LOG_LEVEL: str = "WARNING"
    ENV: str = "production"

    # Seed di default per tutti i comandi (FASTMM_SEED)
    SEED: int = 0

    # Recursion cutoffs: sotto il cutoff gira mm_naive
    CUTOFF_FLOAT: int = 64  # benchmark su f64
    CUTOFF_COUNT: int = 1   # esperimenti di conteggio (7^p)

    # APA Configuration
    APA_INTERPOLATION_NODES: Optional[List[str]] = None  # None = nodi 1..d+1

    # Binary segmentation
    BINSEG_BUDGET_BITS: int = 1 << 26
    KARATSUBA_THRESHOLD_BITS: int = 2048

    class Config:
        env_prefix = "FASTMM_"
        env_file = ".env"
        env_file_encoding = "utf-8"

settings = Settings()
