"""Multi-level selection boid ecology."""

from .cli import cli as main

__all__ = ["main"]
