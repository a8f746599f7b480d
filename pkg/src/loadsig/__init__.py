"""Appliance load-signature extraction from whole-house power measurements."""

__version__ = "0.1.0"
