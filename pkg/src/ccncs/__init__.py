"""Negatively correlated search with cooperative coevolution."""

__version__ = "0.1.0"
