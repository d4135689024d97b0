"""Core settings and errors for the finite-blocklength toolkit."""

from .errors import ComputationError, ConfigError, DomainError, ExoticChannelError
from .settings import get_settings

__all__ = ["ComputationError", "ConfigError", "DomainError", "ExoticChannelError", "get_settings"]
