"""Lifetime-based slicing and fusion planning for tensor-network contraction."""

__version__ = "0.1.0"
