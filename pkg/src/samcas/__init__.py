"""Longitudinal 737-class simulator and stress-test harness for MCAS variants."""

__version__ = "0.1.0"
