"""Exception types raised by the metrics engine."""

from __future__ import annotations


class MetricsError(Exception):
    """Base class for all errors raised by this package."""


class UndecodableTextError(MetricsError):
    """Source bytes are neither UTF-8 nor plain 8-bit text."""


class BraceMismatchError(MetricsError):
    """Unbalanced braces outside any string or comment."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnbalancedDirectiveError(MetricsError):
    """Conditional directives that do not open and close consistently."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyCorpusError(MetricsError):
    """No source file matched the configured patterns."""


class SchemaError(MetricsError):
    """A model file violates its documented line format."""


class DuplicateFeatureError(MetricsError):
    """The same feature name is declared twice in a feature model."""


class CyclicHierarchyError(MetricsError):
    """Feature parent links form a cycle."""


class UnknownMetricError(MetricsError):
    """A metric selection names no known family or variant."""


class UnknownWeightError(MetricsError):
    """A variant selection names no known weight function."""


class ConfigError(MetricsError):
    """The run configuration is unusable."""
