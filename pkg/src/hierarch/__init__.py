"""Computability-hierarchy toolkit: Turing machines, oracle machines,
arithmetical formulas, moving-marker enumerations and group presentations."""

__version__ = "0.1.0"
