"""Exception hierarchy shared by the bound, simulation and CLI layers."""

from __future__ import annotations

from typing import Any, Dict, List, Mapping, Optional, Tuple


class FiniteBlocklengthError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FiniteBlocklengthError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ComputationError(FiniteBlocklengthError, RuntimeError):
    """A numerical procedure failed to converge."""

    def __init__(self, message: str, diagnostics: Optional[Mapping[str, Any]] = None) -> None:
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})


class ExoticChannelError(DomainError):
    """The channel belongs to the excluded exotic class."""


class ConfigError(FiniteBlocklengthError):
    """Run configuration rejected; holds every problem found, not just the first."""

    def __init__(self, problems: List[Tuple[Optional[int], str]]) -> None:
        self.problems = list(problems)
        rendered = "; ".join(
            f"line {line}: {message}" if line is not None else message
            for line, message in self.problems
        )
        super().__init__(rendered or "invalid configuration")


__all__ = [
    "ComputationError",
    "ConfigError",
    "DomainError",
    "ExoticChannelError",
    "FiniteBlocklengthError",
]
