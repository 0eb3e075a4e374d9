"""Scalar parameters and closed-form profiles of the Emden-Fowler reduction.

With u(x) = |x|^{-2/(p-1)} v(-log|x|) the radial equation
Δu + u^p = 0 becomes the autonomous ODE

    v'' - a_p v' - b_p v + v^p = 0,

whose coefficients, equilibria and linear decay rates are collected in
:class:`ExponentParams`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConditionError, DomainError


def critical_exponent(N: int) -> float:
    return (N + 2) / (N - 2)


@dataclass(frozen=True)
class ExponentParams:
    """All scalar quantities derived from the pair (N, eps).

    ``p`` is stored once here; no other module recomputes it from ``eps``.
    """

    N: int
    p: float
    eps: float
    a_p: float
    b_p: float
    c_p: float
    d_p: float
    gamma_plus: float
    gamma_minus: float
    spiral_real: float
    spiral_imag: float
    spiral_ok: bool

    @property
    def p_critical(self) -> float:
        return critical_exponent(self.N)

    def rhs(self, v, dv, lambda_term=0.0, t=None):
        """Second derivative v'' prescribed by the ODE (λe^{-2t}v included)."""
        acc = self.a_p * dv + self.b_p * v - np.abs(v) ** (self.p - 1.0) * v
        if lambda_term:
            acc = acc - lambda_term * np.exp(-2.0 * t) * v
        return acc


def _check_dimension(N) -> int:
    if int(N) != N:
        raise DomainError(f"dimension must be an integer, got {N!r}")
    N = int(N)
    if N == 4:
        raise DomainError("N = 4 needs the logarithmic lambda scaling and is not supported")
    if N < 5:
        raise DomainError(f"dimension must be >= 5, got {N}")
    return N


def derive_params(N: int, eps: float) -> ExponentParams:
    """Build :class:`ExponentParams` for p = (N+2)/(N-2) + eps."""
    N = _check_dimension(N)
    eps = float(eps)
    if not np.isfinite(eps) or eps < 0:
        raise DomainError(f"eps must be finite and >= 0, got {eps}")
    p = critical_exponent(N) + eps
    q = 2.0 / (p - 1.0)
    a = N - 2.0 - 2.0 * q
    b = q * (N - 2.0 * p / (p - 1.0))
    if b <= 0:
        raise DomainError(f"b_p = {b} <= 0; p too large for this reduction")
    c = b ** (1.0 / (p - 1.0))
    d = ((p + 1.0) * b / 2.0) ** (1.0 / (p - 1.0))
    g_minus = -q
    g_plus = N - 2.0 - q
    disc = 4.0 * (p - 1.0) * b - a * a
    spiral_ok = bool(disc > 0)
    imag = 0.5 * np.sqrt(disc) if spiral_ok else float("nan")
    return ExponentParams(
        N=N, p=p, eps=eps, a_p=a, b_p=b, c_p=c, d_p=d,
        gamma_plus=g_plus, gamma_minus=g_minus,
        spiral_real=0.5 * a, spiral_imag=imag, spiral_ok=spiral_ok,
    )


def hamiltonian(params: ExponentParams, x, y):
    """H_p(x, y) = y²/2 - b_p x²/2 + x^{p+1}/(p+1)."""
    p = params.p
    x = np.asarray(x, dtype=float)
    return 0.5 * np.asarray(y) ** 2 - 0.5 * params.b_p * x**2 + np.abs(x) ** (p + 1.0) / (p + 1.0)


def spiral_roots(params: ExponentParams) -> tuple[float, float]:
    """Real and imaginary part of the linearisation roots at c_p."""
    if not params.spiral_ok:
        raise ConditionError("spiral condition 4(p-1)b_p > a_p^2 fails")
    return params.spiral_real, params.spiral_imag


def profile_w0(N: int, t):
    """Emden-Fowler image of the standard bubble (critical case)."""
    N = _check_dimension(N)
    amp = (N * (N - 2) / 4.0) ** ((N - 2) / 4.0)
    t = np.asarray(t, dtype=float)
    # cosh^{-k} written via exp to avoid overflow for large |t|
    k = (N - 2) / 2.0
    at = np.abs(t)
    return amp * (2.0 * np.exp(-at) / (1.0 + np.exp(-2.0 * at))) ** k


def profile_w0_derivative(N: int, t):
    k = (N - 2) / 2.0
    return -k * np.tanh(t) * profile_w0(N, t)


def profile_wp(params: ExponentParams, t, derivative_order: int = 0):
    """Closed-form solution w_p of the linearisation at 0 with w_p(0)=1, w_p'(0)=0."""
    if derivative_order not in (0, 1, 2):
        raise DomainError("derivative_order must be 0, 1 or 2")
    gp, gm = params.gamma_plus, params.gamma_minus
    t = np.asarray(t, dtype=float)
    k = derivative_order
    return (gp * gm**k * np.exp(gm * t) - gm * gp**k * np.exp(gp * t)) / (params.N - 2.0)


@dataclass(frozen=True)
class SphereMode:
    order: int
    lambda_j: float
    gamma_j: float


def sphere_mode(N: int, order: int) -> SphereMode:
    N = _check_dimension(N)
    if order < 0 or int(order) != order:
        raise DomainError(f"order must be a non-negative integer, got {order}")
    lam = float(order * (order + N - 2))
    return SphereMode(order=int(order), lambda_j=lam, gamma_j=float(np.sqrt(lam + (N - 2) ** 2 / 4.0)))
