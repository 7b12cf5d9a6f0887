"""Least primitive root machinery: surveys, sieves, and bound verification."""

__version__ = "0.1.0"
