"""Harmonic level interpolation for imputing gaps in oscillatory time series"""
__version__ = "0.1.0.dev1"
