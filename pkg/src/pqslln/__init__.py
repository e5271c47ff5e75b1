"""Decide and probe the (p, q)-type strong law of large numbers for real laws."""

__version__ = "0.1.0"
