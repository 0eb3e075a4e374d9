"""Finite-dimensional reduced energy and its critical points.

    F_μ(Λ, x) = Λ M(x) Λᵀ - μ C1 Σ Λ_i^{4/(N-2)} + C2 Σ ℓ_i log Λ_i

Variables are packed as z = (Λ_1..Λ_m, x_1, .., x_m) with each x_i in R^N.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .constants import constant
from .errors import BracketError, ConvergenceError, DomainError, SingularityError
from .green import (
    COINCIDENCE_TOL,
    NEG_INFINITY,
    DomainGeometry,
    check_interior,
    interaction_matrix,
    offdiag_derivs,
    robin_derivs,
)


@dataclass(frozen=True)
class ReducedConfiguration:
    geometry: DomainGeometry
    Lambda: np.ndarray
    x: np.ndarray
    mu: float
    ells: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "geometry", DomainGeometry(self.geometry))
        lam = np.atleast_1d(np.asarray(self.Lambda, dtype=float))
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        ells = np.atleast_1d(np.asarray(self.ells, dtype=int))
        if not (lam.size == x.shape[0] == ells.size):
            raise DomainError("Lambda, x and ells must have matching length m")
        if np.any(lam <= 0):
            raise DomainError("Lambda must be strictly positive")
        if np.any(ells < 1):
            raise DomainError("multiplicities must be positive integers")
        if x.shape[1] < 5:
            raise DomainError("points must live in R^N with N >= 5")
        for xi in x:
            check_interior(self.geometry, xi)
        object.__setattr__(self, "Lambda", lam)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "ells", ells)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def m(self) -> int:
        return self.Lambda.size

    @property
    def N(self) -> int:
        return self.x.shape[1]

    def pack(self) -> np.ndarray:
        return np.concatenate([self.Lambda, self.x.ravel()])

    def with_vector(self, z) -> "ReducedConfiguration":
        m, N = self.m, self.N
        z = np.asarray(z, dtype=float)
        return replace(self, Lambda=z[:m].copy(), x=z[m:].reshape(m, N).copy())

    def is_degenerate(self) -> bool:
        for i in range(self.m):
            for j in range(i + 1, self.m):
                if np.linalg.norm(self.x[i] - self.x[j]) <= COINCIDENCE_TOL:
                    return True
        return False


def _exponent(N):
    return 4.0 / (N - 2.0)


def evaluate_F(config: ReducedConfiguration):
    """Value of F_μ, or NEG_INFINITY when two points coincide."""
    M = interaction_matrix(config.geometry, config.x)
    if M.degenerate:
        return NEG_INFINITY
    N = config.N
    lam = config.Lambda
    c1, c2 = constant("C1", N), constant("C2", N)
    return float(lam @ M.entries @ lam - config.mu * c1 * np.sum(lam ** _exponent(N))
                 + c2 * np.sum(config.ells * np.log(lam)))


def _assemble(config: ReducedConfiguration, hessian: bool):
    if config.is_degenerate():
        raise SingularityError("derivatives undefined at coincident points")
    m, N = config.m, config.N
    lam, x, ells = config.Lambda, config.x, config.ells
    q = _exponent(N)
    c1, c2 = constant("C1", N), constant("C2", N)
    mu = config.mu
    n = m * (N + 1)
    g = np.zeros(n)
    H = np.zeros((n, n)) if hessian else None
    xs = lambda i: slice(m + i * N, m + (i + 1) * N)

    R = [robin_derivs(x[i], N) for i in range(m)]
    K = {}
    for i in range(m):
        for j in range(m):
            if i != j:
                K[i, j] = offdiag_derivs(x[i], x[j], N)

    for i in range(m):
        r, dr, d2r = R[i]
        gl = 2 * lam[i] * r - mu * c1 * q * lam[i] ** (q - 1) + c2 * ells[i] / lam[i]
        gx = lam[i] ** 2 * dr
        for j in range(m):
            if j == i:
                continue
            k, ky = K[i, j][0], K[i, j][1]
            gl += 2 * lam[j] * k
            gx = gx + 2 * lam[i] * lam[j] * ky
        g[i] = gl
        g[xs(i)] = gx
        if not hessian:
            continue
        H[i, i] = 2 * r - mu * c1 * q * (q - 1) * lam[i] ** (q - 2) - c2 * ells[i] / lam[i] ** 2
        hlx = 2 * lam[i] * dr
        hxx = lam[i] ** 2 * d2r
        for j in range(m):
            if j == i:
                continue
            k, ky, kz, kyy, kyz, kzz = K[i, j]
            H[i, j] = 2 * k
            hlx = hlx + 2 * lam[j] * ky
            # ∂²F/∂Λ_j∂x_i
            H[j, xs(i)] = 2 * lam[i] * ky
            hxx = hxx + 2 * lam[i] * lam[j] * kyy
            H[xs(i), xs(j)] = 2 * lam[i] * lam[j] * kyz
        H[i, xs(i)] = hlx
        H[xs(i), xs(i)] = hxx
    if hessian:
        # the Λ-x blocks were filled on one side only
        lx = H[:m, m:].copy()
        H[m:, :m] = lx.T
        H = 0.5 * (H + H.T)
    return g, H


def gradient_F(config: ReducedConfiguration) -> np.ndarray:
    return _assemble(config, hessian=False)[0]


def hessian_F(config: ReducedConfiguration) -> np.ndarray:
    return _assemble(config, hessian=True)[1]


# -- critical points ---------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    config: ReducedConfiguration
    grad_norm: float
    hessian_spectrum: np.ndarray
    nondegenerate: bool
    min_abs_eig: float
    iterations: int = 0
    reduced: bool = False


def certify(config: ReducedConfiguration, iterations: int = 0, hess=None, grad=None,
            reduced: bool = False) -> CriticalPoint:
    g = gradient_F(config) if grad is None else grad
    H = hessian_F(config) if hess is None else hess
    spec = np.linalg.eigvalsh(H)
    radius = float(np.max(np.abs(spec)))
    mae = float(np.min(np.abs(spec)))
    return CriticalPoint(config, float(np.linalg.norm(g)), spec, bool(mae >= 1e-8 * radius), mae,
                         iterations, reduced)


def _max_step(config, z, s):
    """Largest fraction of s keeping Λ positive and the points interior."""
    m, N = config.m, config.N
    frac = 1.0
    lam, dl = z[:m], s[:m]
    neg = dl < 0
    if np.any(neg):
        frac = min(frac, 0.9 * float(np.min(-lam[neg] / dl[neg])))
    for i in range(m):
        xi = z[m + i * N: m + (i + 1) * N]
        for _ in range(60):
            y = xi + frac * s[m + i * N: m + (i + 1) * N]
            r = np.linalg.norm(y)
            ok = r < 1 - 1e-9 if config.geometry is DomainGeometry.UnitBall else r > 1 + 1e-9
            if ok:
                break
            frac *= 0.5
    return frac


def find_critical(config0: ReducedConfiguration, max_iter: int = 100, tol: float = 1e-10) -> CriticalPoint:
    """Damped Newton with Armijo backtracking on ||∇F||²."""
    if config0.is_degenerate():
        raise SingularityError("degenerate start configuration")
    cfg = config0
    z = cfg.pack()
    g = gradient_F(cfg)
    f0 = float(g @ g)
    for it in range(max_iter):
        if np.sqrt(f0) <= tol:
            return certify(cfg, it, grad=g)
        H = hessian_F(cfg)
        s = np.linalg.lstsq(H, -g, rcond=1e-14)[0]
        step = _max_step(cfg, z, s)
        if step <= 1e-14:
            raise DomainError("Newton step leaves the domain irrecoverably")
        accepted = False
        while step > 1e-12:
            z_new = z + step * s
            try:
                cand = cfg.with_vector(z_new)
                g_new = gradient_F(cand)
            except (DomainError, SingularityError):
                step *= 0.5
                continue
            f_new = float(g_new @ g_new)
            # Armijo on φ = |g|²: φ'(0) along the Newton direction is -2φ
            if f_new <= (1 - 2e-4 * step) * f0 or f_new <= tol**2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # accept the smallest step anyway if it still decreases, else stop
            if f_new < f0:
                accepted = True
            else:
                raise ConvergenceError("line search failed", last_iterate=cfg, residual=np.sqrt(f0))
        cfg, z, g, f0 = cand, z_new, g_new, f_new
    if np.sqrt(f0) <= tol:
        return certify(cfg, max_iter, grad=g)
    raise ConvergenceError(f"no convergence in {max_iter} iterations", last_iterate=cfg, residual=np.sqrt(f0))


# -- one tower at the centre of the ball -------------------------------------

def _dF_dLambda_center(N, ell, mu, lam):
    q = _exponent(N)
    return 2 * lam - mu * constant("C1", N) * q * lam ** (q - 1) + constant("C2", N) * ell / lam


def _center_roots(N, ell, mu, grid_points):
    """Sign changes of ∂F/∂Λ at x = 0, including pairs hidden inside one grid cell."""
    from scipy.optimize import brentq, minimize_scalar

    f = lambda s: _dF_dLambda_center(N, ell, mu, s)
    lam = np.logspace(-3, 3, grid_points)
    d = f(lam)
    nodes = [lam[0]]
    # refine interior local minima so that a dip below zero is not missed
    for k in range(1, lam.size - 1):
        if d[k] <= d[k - 1] and d[k] <= d[k + 1]:
            res = minimize_scalar(f, bounds=(lam[k - 1], lam[k + 1]), method="bounded",
                                  options={"xatol": 1e-14})
            nodes.extend([lam[k - 1], res.x, lam[k + 1]])
    nodes.extend(lam.tolist())
    nodes = np.unique(np.asarray(nodes))
    vals = f(nodes)
    roots = []
    for k in np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]:
        roots.append(brentq(f, nodes[k], nodes[k + 1], xtol=1e-15))
    return roots


def scenario_ball(N: int, ell: int, mu: float, grid_points: int = 601) -> list:
    """All critical points with x = 0 in the unit ball (m = 1).

    Λ is scanned on a log grid in [1e-3, 1e3]; each bracketed root is
    polished by the full-space Newton iteration.
    """
    if mu < 0:
        raise DomainError("mu must be non-negative")
    out = []
    for root in _center_roots(N, ell, mu, grid_points):
        cfg = ReducedConfiguration(DomainGeometry.UnitBall, [root], np.zeros((1, N)), mu, [ell])
        out.append(find_critical(cfg))
    return out


def fold_threshold(N: int, ell: int, tol: float = 1e-10) -> float:
    """Smallest μ at which scenario_ball produces two critical points.

    μ is doubled until two roots appear, then bisected.
    """
    count = lambda mu: len(_center_roots(N, ell, mu, 601))
    lo, hi = 0.0, 1.0
    while count(hi) != 2:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise BracketError("no pair of critical points found while doubling mu")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if count(mid) == 2:
            hi = mid
        else:
            lo = mid
    return hi


def fold_closed_form(N: int, ell: int) -> float:
    """For N = 6 the Λ-equation is quadratic: μ* = sqrt(8 C2 ℓ)/C1."""
    if N != 6:
        raise DomainError("closed form available for N = 6 only")
    return float(np.sqrt(8 * constant("C2", 6) * ell) / constant("C1", 6))


# -- antipodal pair outside the ball ----------------------------------------

def a_star_residual(N: int, a: float) -> float:
    return (2 * a) ** (1 - N) - a * (a * a - 1) ** (1 - N) - a * (a * a + 1) ** (1 - N)


def solve_a_star(N: int, lo: float = 1 + 1e-9, hi: float = 100.0, max_steps: int = 52,
                 history: list | None = None) -> float:
    """Root a_* > 1 of (2a)^{1-N} = a(a²-1)^{1-N} + a(a²+1)^{1-N} by bisection."""
    if N < 5:
        raise DomainError("N must be >= 5")
    f = lambda a: a_star_residual(N, a)
    flo, fhi = f(lo), f(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError("a_* equation has no sign change on the bracket")
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if history is not None:
            history.append(hi - lo)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return lo if abs(flo) < abs(fhi) else hi


def exterior_pair_lambda(N: int, ell1: int, a: float) -> float:
    rad = 2 * (2 * a) ** (2 - N) - 2 * (a * a - 1) ** (2 - N) - 2 * (a * a + 1) ** (2 - N)
    if rad <= 0:
        raise DomainError(f"radicand {rad} <= 0")
    return float(np.sqrt(constant("C2", N) * ell1 / rad))


def _symmetric_jacobian(N, m=2):
    """z as a linear function of the reduced variables (Λ, a)."""
    J = np.zeros((m * (N + 1), 2))
    J[0, 0] = J[1, 0] = 1.0
    J[m + 0, 1] = 1.0        # x_1 = (a, 0, ..)
    J[m + N, 1] = -1.0       # x_2 = (-a, 0, ..)
    return J


def scenario_exterior_pair(N: int, ell1: int) -> CriticalPoint:
    """Antipodal critical point of F_0 outside the unit ball, certified in (Λ, a)."""
    a = solve_a_star(N)
    lam = exterior_pair_lambda(N, ell1, a)
    x = np.zeros((2, N))
    x[0, 0], x[1, 0] = a, -a
    cfg = ReducedConfiguration(DomainGeometry.ExteriorUnitBall, [lam, lam], x, 0.0, [ell1, ell1])
    J = _symmetric_jacobian(N)
    g = gradient_F(cfg)
    H = hessian_F(cfg)
    gr = J.T @ g
    Hr = J.T @ H @ J
    spec = np.linalg.eigvalsh(Hr)
    mae = float(np.min(np.abs(spec)))
    return CriticalPoint(cfg, float(np.linalg.norm(gr)), spec,
                         bool(mae >= 1e-8 * np.max(np.abs(spec))), mae, 0, reduced=True)


# -- annulus expansion --------------------------------------------------------

@dataclass(frozen=True)
class AnnulusValue:
    value: float
    warning: bool


def annulus_expanded_F(N: int, rho: float, ell1: int, Lambda, s: float, t: float,
                       order_window: float = 100.0) -> AnnulusValue:
    """Small-hole expansion of F_0 for the annulus B(0,1) - B(0,ρ).

    ``warning`` is set when s/ρ or t/ρ leaves (1, order_window).
    """
    if not (0 < rho < 1 and rho < s < 1 and rho < t < 1):
        raise DomainError("need 0 < rho < s, t < 1")
    l1, l2 = Lambda
    if l1 <= 0 or l2 <= 0:
        raise DomainError("Lambda must be positive")
    c2 = constant("C2", N)
    S, T = s / rho, t / rho
    val = rho ** (2 - N) * (l1**2 * abs(1 - S * S) ** (2 - N) + l2**2 * abs(1 - T * T) ** (2 - N))
    val -= 2 * l1 * l2 * ((s + t) ** (2 - N) - rho ** (2 - N) * (1 + s * t / rho**2) ** (2 - N))
    val += c2 * ell1 * np.log(l1 * l2)
    warn = not (1 < S < order_window and 1 < T < order_window)
    return AnnulusValue(float(val), warn)


def annulus_scaled_gradient(N: int, ell1: int, w) -> np.ndarray:
    """Gradient of the annulus expansion in (L1, L2, σ, τ) with s = ρσ, Λ = ρ^{(N-2)/2}L.

    In these variables the ρ-dependence drops out up to an additive constant.
    """
    L1, L2, S, T = w
    c2 = constant("C2", N)
    A = lambda u: abs(u * u - 1) ** (2 - N)
    dA = lambda u: (2 - N) * abs(u * u - 1) ** (1 - N) * np.sign(u * u - 1) * 2 * u
    B = (S + T) ** (2 - N) - (1 + S * T) ** (2 - N)
    BS = (2 - N) * ((S + T) ** (1 - N) - T * (1 + S * T) ** (1 - N))
    BT = (2 - N) * ((S + T) ** (1 - N) - S * (1 + S * T) ** (1 - N))
    return np.array([
        2 * L1 * A(S) - 2 * L2 * B + c2 * ell1 / L1,
        2 * L2 * A(T) - 2 * L1 * B + c2 * ell1 / L2,
        L1**2 * dA(S) - 2 * L1 * L2 * BS,
        L2**2 * dA(T) - 2 * L1 * L2 * BT,
    ])


def annulus_critical(N: int, rho: float, ell1: int = 1, max_iter: int = 50, start=None):
    """Critical point of the annulus expansion, returned in original variables.

    Newton on the analytic scaled gradient, Jacobian by central differences.
    Returns (Λ1, Λ2, s, t), gradient norm (scaled) and Hessian spectrum (scaled).
    """
    a = solve_a_star(N)
    lam0 = exterior_pair_lambda(N, ell1, a)
    scale = np.array([rho ** ((N - 2) / 2)] * 2 + [rho] * 2)
    w = np.array([lam0, lam0, a, a]) * (np.array([1.05, 0.97, 1.02, 0.99]) if start is None else start)
    grad = lambda u: annulus_scaled_gradient(N, ell1, u)

    def jac(u, h=1e-6):
        J = np.zeros((4, 4))
        for i in range(4):
            e = np.zeros(4)
            e[i] = h * max(abs(u[i]), 1.0)
            J[:, i] = (grad(u + e) - grad(u - e)) / (2 * e[i])
        return 0.5 * (J + J.T)

    for _ in range(max_iter):
        g = grad(w)
        if np.linalg.norm(g) <= 1e-12 * max(1.0, lam0):
            break
        w = w - np.linalg.solve(jac(w), g)
    g = grad(w)
    return w * scale, float(np.linalg.norm(g)), np.linalg.eigvalsh(jac(w))
