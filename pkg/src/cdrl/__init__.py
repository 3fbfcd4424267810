"""Conditional deep RL with hindsight reward tweaking."""
__version__ = "0.1.0"
