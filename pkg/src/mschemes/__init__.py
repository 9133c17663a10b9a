"""Exact association schemes, m-schemes, and deterministic scheme-driven
polynomial factoring over finite fields."""

from . import assoc, cli, factor, gf, linalg, mscheme

__all__ = ["assoc", "cli", "factor", "gf", "linalg", "mscheme"]
__version__ = "0.1.0"
