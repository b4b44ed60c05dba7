"""Aspect-based embedding of heterogeneous information networks."""

__version__ = "0.1.0"
