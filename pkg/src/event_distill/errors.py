"""Exception hierarchy shared across the package.

Every library-raised error derives from :class:`EventDistillError` so callers
can catch one type. The CLI maps each subclass to a distinct exit code.
"""

from __future__ import annotations


class EventDistillError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EventDistillError):
    """Invalid parameter, option combination, or input unusable for an operation."""


class EmptyStreamError(ConfigError):
    """An operation that needs at least one event received an empty stream."""


class FormatError(EventDistillError):
    """Malformed file or byte stream (CSV, EVS1, EMB1, or CMP1)."""


class ProviderError(EventDistillError):
    """An embedding provider failed: transport, lookup, or response problem."""
