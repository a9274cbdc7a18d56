"""Poisson-coalgebra toolkit for Lie-Hamilton systems."""

__version__ = "0.1.0"
