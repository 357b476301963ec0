"""Exact certificates for quadratic Killing tensors on HP^n and OP^2."""

__version__ = "0.1.0"
