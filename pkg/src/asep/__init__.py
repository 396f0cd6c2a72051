"""ASEP shock fluctuations: coupled event-driven simulation and limit laws."""

__version__ = "0.1.0"
