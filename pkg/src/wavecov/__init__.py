"""Covariance analysis of linear wave equations under rotations and boosts."""

__version__ = "0.1.0"
