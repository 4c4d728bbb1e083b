"""Sketch-and-solve least squares: operators, exact efficiencies and their limits."""

__version__ = "0.1.0"
