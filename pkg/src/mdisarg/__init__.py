"""Simulation and optimization of measurement-device-independent SARG04 QKD."""

__version__ = "0.1.0"
