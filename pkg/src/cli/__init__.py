"""Command line | Entry point for the deepfake-peft console script"""

from .main import build_parser, main

__all__ = ["build_parser", "main"]
