"""Determinantal eigenangle kernels of Haar-random matrices and their rates of
convergence to the sine process."""

from .kernels import Ensemble, KernelSpec

__version__ = "0.1.0"

__all__ = ["Ensemble", "KernelSpec", "__version__"]
