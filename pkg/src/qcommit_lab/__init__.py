"""Finite-instance laboratory for commitments built from one-way state generators."""

__version__ = "0.1.0"
