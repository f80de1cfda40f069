"""Exact and numerical toolkit for a fourth-order Painleve-type Hamiltonian system."""
from __future__ import annotations

from .symfield import RatFunc, parse, render, substitute, differentiate, equals

__all__ = ["RatFunc", "parse", "render", "substitute", "differentiate", "equals"]
__version__ = "0.1.0"
