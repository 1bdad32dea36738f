"""Simulator for Gaussian-prime secret key generation over analog function computation."""

__version__ = "0.1.0"
