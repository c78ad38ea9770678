"""Processor verification with tautology-induced universal properties."""

__version__ = "0.1.0"
