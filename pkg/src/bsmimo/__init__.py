"""Beam-space MIMO with a single RF chain: antenna model, capacity, load optimization."""

__version__ = "0.1.0"
