"""Modeling toolkit for quasi-phase-matched type-0 SPDC pair sources."""

__version__ = "0.1.0"
