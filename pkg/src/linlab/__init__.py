"""Simulation and linearization toolkit for shared read/write registers."""

from .core import (
    BOT,
    INF,
    ConfigurationError,
    Event,
    History,
    LamportTimestamp,
    Linearization,
    OperationRecord,
    Ordering,
    TraceError,
    VectorTimestamp,
    history_prefix,
    is_active,
    precedes,
    vts_compare,
)

__all__ = [
    "BOT",
    "INF",
    "ConfigurationError",
    "Event",
    "History",
    "LamportTimestamp",
    "Linearization",
    "OperationRecord",
    "Ordering",
    "TraceError",
    "VectorTimestamp",
    "history_prefix",
    "is_active",
    "precedes",
    "vts_compare",
]
