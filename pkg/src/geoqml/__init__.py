"""Riemannian SPD/Grassmann geometry, quantum state-space geometry and
hybrid quantum-classical pipelines on an exact statevector simulator."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
