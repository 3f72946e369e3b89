"""Finite, executable model of a zeroless Q_s construction over GF(2)."""

__version__ = "0.1.0"
