"""Numerical laboratory for the Selberg trace formula on compact surfaces."""

__version__ = "0.1.0"
