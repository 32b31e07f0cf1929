"""Optimal multiplierless second-order IIR filter design and verification."""

__version__ = "0.1.0"
