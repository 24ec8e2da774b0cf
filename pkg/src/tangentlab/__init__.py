"""tangentlab: pointwise Lagrange geometry on tangent manifolds."""

__version__ = "0.1.0"
