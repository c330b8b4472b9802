"""Numerical laboratory for borderline L1 / W^{1,n} duality estimates of
divergence-free vector fields on R^n and on hyperbolic space."""

__version__ = "0.1.0"
