"""Configuration format, run schemas and the command-line front end."""

from .config_format import load_config, parse_config, serialize
from .schemas import RunConfig

__all__ = ["RunConfig", "load_config", "parse_config", "serialize"]
