"""Central configuration loaded from environment variables."""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part.strip())


# --- Randomness ---
RNG_SEED: int = int(os.environ.get("LFCC_RNG_SEED", "0"))

# --- Rigid-module search ---
SEARCH_PRIME: int = int(os.environ.get("LFCC_SEARCH_PRIME", "5"))
SEARCH_RETRY_PRIMES: tuple[int, ...] = _int_list(os.environ.get("LFCC_SEARCH_RETRY_PRIMES", "7,11"))
MAX_TRIES: int = int(os.environ.get("LFCC_MAX_TRIES", "64"))
# End algebras with at most this many elements are searched for idempotents.
IDEMPOTENT_SEARCH_LIMIT: int = int(os.environ.get("LFCC_IDEMPOTENT_SEARCH_LIMIT", "2048"))

# --- Counting ---
# Threads used to count at several primes at once; 1 counts sequentially.
WORKERS: int = int(os.environ.get("LFCC_WORKERS", "1"))
# Parameter vectors evaluated per vectorized rank computation.
BATCH_SIZE: int = int(os.environ.get("LFCC_BATCH_SIZE", "16384"))

# --- Cluster exploration ---
MAX_SEEDS: int = int(os.environ.get("LFCC_MAX_SEEDS", "10000"))

# --- Cache ---
CACHE_DIR: str = os.environ.get("LFCC_CACHE_DIR", "")
CACHE_SPOT_CHECK_RATE: float = float(os.environ.get("LFCC_CACHE_SPOT_CHECK_RATE", "0.05"))

# --- Output ---
REPORTS_DIR: Path = Path(os.environ.get("LFCC_REPORTS_DIR", "reports"))
LOG_LEVEL: str = os.environ.get("LFCC_LOG_LEVEL", "INFO")

# --- Constants ---
SCHEMA_VERSION: str = "lfcc/1"
CODE_VERSION: str = "0.1.0"


def validate() -> list[str]:
    """Return a list of problems with the environment-provided values."""
    problems = []
    if SEARCH_PRIME < 2:
        problems.append(f"LFCC_SEARCH_PRIME must be a prime, got {SEARCH_PRIME}")
    if any(p < 2 for p in SEARCH_RETRY_PRIMES):
        problems.append(f"LFCC_SEARCH_RETRY_PRIMES must be primes, got {SEARCH_RETRY_PRIMES}")
    if MAX_TRIES < 1:
        problems.append(f"LFCC_MAX_TRIES must be positive, got {MAX_TRIES}")
    if WORKERS < 1:
        problems.append(f"LFCC_WORKERS must be positive, got {WORKERS}")
    if BATCH_SIZE < 1:
        problems.append(f"LFCC_BATCH_SIZE must be positive, got {BATCH_SIZE}")
    if MAX_SEEDS < 1:
        problems.append(f"LFCC_MAX_SEEDS must be positive, got {MAX_SEEDS}")
    if not 0.0 <= CACHE_SPOT_CHECK_RATE <= 1.0:
        problems.append(f"LFCC_CACHE_SPOT_CHECK_RATE must lie in [0, 1], got {CACHE_SPOT_CHECK_RATE}")
    if LOG_LEVEL.upper() not in {"DEBUG", "INFO", "WARNING", "ERROR"}:
        problems.append(f"LFCC_LOG_LEVEL must be DEBUG, INFO, WARNING or ERROR, got {LOG_LEVEL}")
    return problems
