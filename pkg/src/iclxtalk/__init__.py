"""Crosstalk simulation for inductive-coupling-link arrays in stacked chips."""

__version__ = "0.1.0"
