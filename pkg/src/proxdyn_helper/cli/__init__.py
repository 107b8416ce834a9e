"""Command-line entry point for proxdyn_helper."""

from .main import main

__all__ = ["main"]
