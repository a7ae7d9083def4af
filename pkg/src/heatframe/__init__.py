"""Controlled-English steady heat conduction problems: parse, classify, solve, bound."""

__version__ = "0.1.0"
