"""Heteroclinic transition layers on the strip R x (0,1) by energy minimisation."""
from ._stencil import compiled_available, get_backend, set_backend

__version__ = "0.1.0"
__all__ = ["compiled_available", "get_backend", "set_backend", "__version__"]
