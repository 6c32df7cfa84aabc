"""Pulse-pattern-controlled dual grid converter: simulation and analysis."""

__version__ = "0.1.0"
