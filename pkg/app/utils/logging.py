"""
Logging setup per FastMM.

Configura loguru una sola volta per processo: stderr come unico sink,
formato leggibile in sviluppo e compatto in produzione.
"""

import sys

from loguru import logger

from app.config import settings


_configured = False


def setup_logging(level: str = None) -> None:
    """
    Configure the loguru sink.

    Args:
        level: Override for settings.LOG_LEVEL (e.g. "DEBUG" from --verbose)
    """
    global _configured

    logger.remove()  # Rimuovi handler default

    if settings.ENV == "production":
        logger.add(
            sys.stderr,
            format="{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} | {message}",
            level=level or settings.LOG_LEVEL,
            serialize=False
        )
    else:
        logger.add(
            sys.stderr,
            colorize=True,
            format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>",
            level=level or settings.LOG_LEVEL
        )

    _configured = True


def is_configured() -> bool:
    return _configured
