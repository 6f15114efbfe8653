"""Tracking-based catch/throw detection with adaptive inference and a crop-record pipeline."""

__version__ = "0.1.0"
