"""Parallel-repetition toolkit for k-player free games."""
__version__ = "0.1.0"
