"""Asymptotic-preserving all-speed finite volume solver."""

__version__ = "0.1.0"
