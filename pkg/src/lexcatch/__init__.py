"""Trainable catchphrase extraction for legal case reports."""

__version__ = "0.1.0"
