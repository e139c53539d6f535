"""Gauge-transform asymptotics for −d²/dx² + εV with quasi-periodic and smooth almost-periodic V."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"
