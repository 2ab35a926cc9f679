"""Contextual biasing for end-to-end speech decoding."""

__version__ = "0.1.0"
