"""Exception types shared across the engine.

The CLI maps these onto exit codes, so raising the right class matters:
StoreError -> 2, ProviderError / MisconfigurationError -> 3, FormatError
and bad user input -> 4.
"""

from __future__ import annotations


class LlmrsError(Exception):
    """Base class for all engine errors."""


class StoreError(LlmrsError):
    """A store directory or one of its artifacts is missing or unreadable."""


class MisconfigurationError(LlmrsError):
    """A provider or endpoint is not configured for the requested operation."""


class ProviderError(LlmrsError):
    """A model provider failed (transport errors, bad responses)."""


class FormatError(LlmrsError):
    """An interchange or store file violates its format contract.

    ``line`` is the 1-based line number when the violation is tied to a
    specific row, else None.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
