"""Parallel-in-time laboratory for the rotating shallow water equations."""

__version__ = "0.1.0"
