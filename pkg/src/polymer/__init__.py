"""Numerics for quantum geometry: area spectrum, cosmological difference equation, horizon state counting."""

__version__ = "0.1.0"
