"""Pseudospectral simulation and control of the Benjamin equation on the torus."""

__version__ = "0.1.0"
