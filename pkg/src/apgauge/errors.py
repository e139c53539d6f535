"""Error hierarchy. Each class carries the CLI exit code used for it."""

from __future__ import annotations


class ApgaugeError(Exception):
    exit_code = 1


class ConfigError(ApgaugeError):
    """Invalid configuration document; ``path`` names the offending field."""

    exit_code = 2

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InvalidPotential(ApgaugeError):
    exit_code = 3


class ShellTooLarge(ApgaugeError):
    exit_code = 4


class DiophantineViolation(ApgaugeError):
    exit_code = 5


class OracleUnavailable(ApgaugeError):
    """Requested oracle does not apply (e.g. Hill discriminant for non-periodic V)."""

    exit_code = 6


class ConvergenceError(ApgaugeError):
    exit_code = 7


class FitError(ApgaugeError):
    exit_code = 8


class DomainError(ApgaugeError):
    """Request outside the validity range (epsilon too large, point in the wrong zone, ...)."""

    exit_code = 9


class SmoothnessViolation(ConfigError):
    exit_code = 10


class SearchExhausted(ApgaugeError):
    exit_code = 11


class GeometryError(ApgaugeError):
    """Resonance zones overlap."""

    exit_code = 12
