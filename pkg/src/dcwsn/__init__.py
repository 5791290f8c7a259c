"""Connectivity, routing and power simulation for duty-cycled wireless sensor networks."""

__version__ = "0.1.0"
