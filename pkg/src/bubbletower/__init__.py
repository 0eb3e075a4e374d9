"""Bubble-tower solutions of a slightly supercritical semilinear problem.

Numerical companion covering the Emden-Fowler phase plane, asymptotic
constants, Green/Robin reduced energies, the radial matched construction
and multi-bubble profile synthesis.
"""

from .params import ExponentParams, derive_params, hamiltonian, profile_w0, profile_wp
from .errors import BubbleTowerError

__all__ = [
    "BubbleTowerError",
    "ExponentParams",
    "derive_params",
    "hamiltonian",
    "profile_w0",
    "profile_wp",
]

__version__ = "0.1.0"
