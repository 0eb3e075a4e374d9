"""Dimensional constants C1..C8 by quadrature and by Beta-function closed forms.

Two independent routes are kept on purpose: ``method="quadrature"`` uses the
composite Gauss-Legendre rule below on the defining integrals, while
``method="closed"`` evaluates hand-reduced Beta/Gamma expressions.
"""

from __future__ import annotations

import enum
import json
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.special import beta, gamma

from .errors import DomainError


class ConstantKind(str, enum.Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"
    C5 = "C5"
    C6 = "C6"
    C7 = "C7"
    C8 = "C8"


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _gauss_legendre(f, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    fx = np.asarray(f(x), dtype=float).reshape(panels, -1)
    return float(np.sum(half * (fx @ _GL_WEIGHTS)))


def improper_quadrature(integrand, decay_rate: float, width: float = 0.5) -> float:
    """Integrate a function over R that decays like exp(-decay_rate |t|).

    Composite 24-point Gauss-Legendre on [-T, T]; T doubles until the tail
    estimate |f(±T)|/decay_rate is below 1e-14 of the running value.
    ``integrand`` must accept numpy arrays.
    """
    if not decay_rate > 0:
        raise DomainError("decay_rate must be positive")
    T = max(8.0, 16.0 / decay_rate)
    for _ in range(12):
        panels = int(np.ceil(2 * T / width))
        val = _gauss_legendre(integrand, -T, T, panels)
        tail = (abs(float(integrand(np.array([T]))[0])) + abs(float(integrand(np.array([-T]))[0]))) / decay_rate
        if tail <= 1e-14 * max(abs(val), 1e-300):
            return val
        T *= 2.0
    return val


def _sech_pow(m):
    def f(t):
        at = np.abs(t)
        return (2.0 * np.exp(-at) / (1.0 + np.exp(-2.0 * at))) ** m
    return f


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere S^{N-1}."""
    return 2.0 * np.pi ** (N / 2.0) / gamma(N / 2.0)


# -- the three primitive integrals, two routes each ---------------------------

def sech_moment(m: float, method: str = "closed") -> float:
    """∫_R sech^m t dt."""
    if method == "closed":
        return float(beta(m / 2.0, 0.5))
    return improper_quadrature(_sech_pow(m), m)


def weighted_sech_moment(m: float, method: str = "closed") -> float:
    """∫_R e^{-2t} sech^m t dt, finite for m > 2."""
    if m <= 2:
        raise DomainError("weighted sech moment diverges for m <= 2")
    if method == "closed":
        return float(2.0 ** (m - 1.0) * beta(m / 2.0 + 1.0, m / 2.0 - 1.0))
    g = _sech_pow(m)
    return improper_quadrature(lambda t: np.exp(-2.0 * t) * g(t), m - 2.0)


def bubble_power_integral(N: int, method: str = "closed") -> float:
    """∫_{R^N} (1+|x|²)^{-(N+2)/2} dx."""
    if method == "closed":
        return float(sphere_area(N) * 0.5 * beta(N / 2.0, 1.0))
    # radial reduction with r = e^s
    f = lambda s: np.exp(N * s) * (1.0 + np.exp(2.0 * s)) ** (-(N + 2) / 2.0)
    return sphere_area(N) * improper_quadrature(f, 2.0)


def bubble_dirichlet_energy(N: int, method: str = "closed") -> float:
    """∫_{R^N} |∇U|² for the standard bubble U = (N(N-2))^{(N-2)/4}(1+|x|²)^{-(N-2)/2}."""
    pref = (N - 2.0) ** 2 * (N * (N - 2.0)) ** ((N - 2) / 2.0) * sphere_area(N)
    if method == "closed":
        return float(pref * 0.5 * beta(N / 2.0 + 1.0, N / 2.0 - 1.0))
    f = lambda s: np.exp((N + 2) * s) * (1.0 + np.exp(2.0 * s)) ** (-float(N))
    return pref * improper_quadrature(f, N - 2.0)


# -- the constants ----------------------------------------------------------

def _check_N(N) -> int:
    if int(N) != N or N < 5:
        raise DomainError(f"constants are defined for integer N >= 5, got {N}")
    return int(N)


@lru_cache(maxsize=None)
def _table(N: int, method: str) -> dict:
    m = N - 2.0
    amp2 = (N * (N - 2) / 4.0) ** ((N - 2) / 2.0)
    c4 = amp2 * m**2 / (2.0 * (N - 1.0)) * sech_moment(m, method)
    c5 = amp2 * weighted_sech_moment(m, method)
    c6 = (2.0 / m) * np.log(2.0) + 0.5 * np.log(N * (N - 2.0))
    c7 = m**2 * c4 / 8.0
    c8 = c4 ** (2.0 / m) * c5 * np.exp(-2.0 * c6)
    c2 = c4 / 2.0
    c1 = 2.0 ** (4.0 / m) * c8 / (m * c4 ** (2.0 / m))
    c3 = (N * (N - 2.0)) ** ((N + 2) / 4.0) * bubble_power_integral(N, method)
    return {"C1": c1, "C2": c2, "C3": c3, "C4": c4, "C5": c5, "C6": c6, "C7": c7, "C8": c8}


def constant(kind, N: int, method: str = "closed") -> float:
    """Value of one of the constants C1..C8 in dimension N.

    ``method`` selects the closed-form route or the Gauss-Legendre route.
    """
    N = _check_N(N)
    if method not in ("closed", "quadrature"):
        raise DomainError(f"unknown method {method!r}")
    key = ConstantKind(kind).value
    return _table(N, method)[key]


def all_constants(N: int, method: str = "closed") -> dict:
    N = _check_N(N)
    return dict(_table(N, method))


@lru_cache(maxsize=None)
def calibrated() -> dict:
    """Calibrated bounds measured once by ``scripts/calibrate_constants.py``."""
    text = resources.files("bubbletower").joinpath("calibrated.json").read_text()
    return json.loads(text)
