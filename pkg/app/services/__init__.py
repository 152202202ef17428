"""
Services package exports.
"""

from app.services.catalog import catalog
from app.services.benchmark import benchmark_service
from app.services.history import history_service

__all__ = [
    "catalog",
    "benchmark_service",
    "history_service",
]
