"""Finite combinatorics of graph covers, path morphisms and tangled towers."""

__version__ = "0.1.0"
