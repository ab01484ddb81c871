"""DG-gPC solver for transport with a random wave speed, with SIAC post-processing."""

from siacgpc.errors import (
    ArgumentError,
    ConfigurationError,
    DegenerateSystemError,
    InstabilityError,
    StateError,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "ConfigurationError",
    "DegenerateSystemError",
    "InstabilityError",
    "StateError",
    "__version__",
]
