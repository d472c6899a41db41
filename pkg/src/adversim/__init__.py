"""Simulation of online learning games against restricted adversaries."""

__version__ = "0.1.0"
