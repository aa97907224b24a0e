"""Package-wide exception types."""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid configuration: bad key, malformed value, or inconsistent setup."""


class AccuracyError(RuntimeError):
    """A quadrature or coefficient build failed to reach its accuracy target."""
