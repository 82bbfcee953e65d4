"""Burned-in subtitle OCR post-processing and singing-segment mining."""

__version__ = "0.1.0"
