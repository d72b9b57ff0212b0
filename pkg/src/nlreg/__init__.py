"""Numerics for interior regularity of nonlocal equations with jump kernels.

Modules: ``increments`` (finite differences, translated domains, ball
geometry), ``kernels`` (admissible kernels and checks), ``seminorms``
(Gagliardo, Nikol'skii, Besov, moduli), ``solver`` (P1 Galerkin),
``analysis`` (regularity experiments) and ``cli``.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .increments import Domain1D, GridFunction
from .kernels import KernelSpec, frac_laplacian_kernel, holder_coefficient_kernel, truncated_kernel
from .solver import WeakProblem, assemble, solve

__all__ = ["Domain1D", "GridFunction", "KernelSpec", "frac_laplacian_kernel",
           "holder_coefficient_kernel", "truncated_kernel", "WeakProblem", "assemble", "solve"]
