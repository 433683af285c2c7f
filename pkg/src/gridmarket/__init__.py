"""Zonal electricity market simulation: forecasts, unit dispatch, order books and coupling."""

__version__ = "0.1.0"
