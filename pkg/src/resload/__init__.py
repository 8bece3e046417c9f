"""Behavior-driven synthesis of minute-resolution residential load profiles."""

__version__ = "0.1.0"
