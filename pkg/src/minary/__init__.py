"""Seeded simulator and verification suite for stochastic EMA consensus dynamics."""

__version__ = "0.1.0"
