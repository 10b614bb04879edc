"""High-order finite elements for heterogeneous Helmholtz problems on the unit disk."""
from ._backend import BACKEND, available_backends

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__", "available_backends"]
