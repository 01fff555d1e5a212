"""Autotuning of tile factors for blocked linear-algebra kernels."""

__version__ = "0.1.0"
