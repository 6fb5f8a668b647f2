"""Exact quantization of quasi-Poisson moduli algebras by fusion and reduction."""

__version__ = "0.1.0"
