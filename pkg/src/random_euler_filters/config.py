"""Runtime settings loaded from the environment."""

import logging
import os
from pathlib import Path

try:
    from dotenv import load_dotenv

    DOTENV_AVAILABLE = True
except ImportError:
    DOTENV_AVAILABLE = False

logger = logging.getLogger(__name__)

DEFAULT_MAX_THEORY_DIM = 32
DEFAULT_WORKERS = 1
DEFAULT_CKLMS_MAX_DICTIONARY = 200_000
DEFAULT_LOG_LEVEL = "INFO"


def _env_positive_int(var_name: str, fallback: int) -> int:
    """Read a positive integer override, falling back when it is unusable."""
    raw = os.getenv(var_name)
    if not raw:
        return fallback
    try:
        value = int(raw)
    except ValueError:
        logger.warning(
            "Ignoring invalid %s=%r (not an integer); using default %d",
            var_name,
            raw,
            fallback,
        )
        return fallback
    if value <= 0:
        logger.warning(
            "Ignoring invalid %s=%r (must be positive); using default %d",
            var_name,
            raw,
            fallback,
        )
        return fallback
    return value


class Config:
    """Process-wide settings for experiments and the theory engine."""

    def __init__(
        self,
        max_theory_dim: int = DEFAULT_MAX_THEORY_DIM,
        workers: int = DEFAULT_WORKERS,
        cklms_max_dictionary: int = DEFAULT_CKLMS_MAX_DICTIONARY,
        log_level: str = DEFAULT_LOG_LEVEL,
    ):
        self.max_theory_dim = max_theory_dim
        self.workers = workers
        self.cklms_max_dictionary = cklms_max_dictionary
        self.log_level = log_level

    @classmethod
    def from_env(cls) -> "Config":
        # Load only the explicitly selected working directory's .env file.
        if DOTENV_AVAILABLE:
            env_file = Path.cwd() / ".env"
            if env_file.is_file():
                load_dotenv(env_file, override=False)

        log_level = os.getenv("RECF_LOG_LEVEL", DEFAULT_LOG_LEVEL).strip().upper()
        if log_level not in logging.getLevelNamesMapping():
            logger.warning(
                "Ignoring invalid RECF_LOG_LEVEL=%r; using default %s",
                log_level,
                DEFAULT_LOG_LEVEL,
            )
            log_level = DEFAULT_LOG_LEVEL

        return cls(
            max_theory_dim=_env_positive_int(
                "RECF_MAX_THEORY_DIM", DEFAULT_MAX_THEORY_DIM
            ),
            workers=_env_positive_int("RECF_WORKERS", DEFAULT_WORKERS),
            cklms_max_dictionary=_env_positive_int(
                "RECF_CKLMS_MAX_DICTIONARY", DEFAULT_CKLMS_MAX_DICTIONARY
            ),
            log_level=log_level,
        )
