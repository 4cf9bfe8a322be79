"""Reverse-dictionary semantic search over dictionary definitions."""

__version__ = "0.1.0"
