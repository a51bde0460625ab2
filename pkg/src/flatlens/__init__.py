"""Eaton-lens dynamics, slit-fold skeletons and pillowcase covers."""

__version__ = "0.1.0"
