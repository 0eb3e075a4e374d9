"""Radial ℓ-tower on the unit ball by piecewise integration and Cauchy matching.

In t = -log r the solution is built on [T_{2i}, T_{2i+2}], i = 0..ℓ-1, where
the T's are read off the heteroclinic.  The innermost piece is the decaying
solution at t = +∞; every other piece starts from a minimum
(ε_{p,ℓ-1-i} + α_i, 0) of the autonomous flow, advanced by a time shift
t_i, and is then integrated with the full λe^{-2t}v term.  The pairs
(α_i, t_i) are fixed from the outermost interface inward by 2×2 Newton
iterations on the Cauchy-data mismatch.

An independent oracle shoots the radial ODE in r directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .constants import constant
from .errors import (
    BlowUpError,
    BranchNotFoundError,
    CountError,
    DomainError,
    MatchingError,
    RegionError,
    ResolutionError,
)
from .params import ExponentParams, derive_params
from .phase_plane import ATOL, RTOL, HeteroclinicProfile, Trajectory, integrate, seed_correction, shoot_heteroclinic


@dataclass(frozen=True)
class MatchConfig:
    N: int
    eps: float
    mu: float = 0.0
    ell: int = 1
    xi: float = 0.0

    def __post_init__(self):
        if not 0 < self.eps <= 0.1:
            raise DomainError("eps must lie in (0, 0.1]")
        if self.ell < 1:
            raise DomainError("ell must be >= 1")
        if not self.params.spiral_ok:
            raise DomainError("spiral condition fails")

    @property
    def params(self) -> ExponentParams:
        return derive_params(self.N, self.eps)

    @property
    def lam(self) -> float:
        return self.mu * self.eps ** ((self.N - 4.0) / (self.N - 2.0))

    @property
    def r_eps(self) -> float:
        return self.eps ** (2.0 / (self.N**2 - 4.0))

    @property
    def trust_gamma(self) -> float:
        return 0.5 * (1.0 + self.params.p / 2.0)


@lru_cache(maxsize=32)
def heteroclinic_for(N: int, eps: float, bumps: int) -> HeteroclinicProfile:
    return shoot_heteroclinic(derive_params(N, eps), bumps)


def build_grid(profile: HeteroclinicProfile, ell: int, xi: float) -> np.ndarray:
    """Nodes T_0 = 0 < T_1 < ... < T_{2ℓ-1}; T_{2ℓ} = +∞ is implicit."""
    crit = profile.critical
    if len(crit.t_min) < ell or len(crit.t_max) < ell:
        raise CountError(f"profile has {len(crit.t_min)} minima, ell={ell} requested")
    tl = crit.t_min[ell - 1]
    T = np.zeros(2 * ell)
    for i in range(1, ell + 1):
        T[2 * i - 1] = crit.t_max[ell - i] - tl + xi
    for i in range(1, ell):
        T[2 * i] = crit.t_min[ell - i - 1] - tl + xi
    if np.any(np.diff(T) <= 0):
        raise DomainError(f"grid not strictly ordered for xi={xi}: {T}")
    return T


def outer_anchor(profile: HeteroclinicProfile, ell: int, xi: float) -> float:
    """Time of the outermost minimum, t̲_1 - t̲_ℓ + ξ (equals T_{2ℓ-2} for ℓ ≥ 2)."""
    crit = profile.critical
    return float(crit.t_min[0] - crit.t_min[ell - 1] + xi)


@dataclass(frozen=True)
class PiecewiseSolution:
    grid: np.ndarray
    segments: tuple
    alphas: np.ndarray
    shifts: np.ndarray
    mismatch: float
    horizon: float
    config: MatchConfig
    warnings: tuple = ()

    def _segment_index(self, t):
        T = np.append(self.grid[0::2], self.horizon)
        return np.clip(np.searchsorted(T, t, side="right") - 1, 0, len(self.segments) - 1)

    def v(self, t):
        """(v, dv) on [0, ∞); beyond the horizon the decaying linear tail is used."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < -1e-12):
            raise DomainError("t must be >= 0")
        out_v = np.empty_like(t)
        out_d = np.empty_like(t)
        gm = self.config.params.gamma_minus
        far = t > self.horizon
        if np.any(far):
            vh = self.segments[-1](self.horizon)[0][0]
            out_v[far] = vh * np.exp(gm * (t[far] - self.horizon))
            out_d[far] = gm * out_v[far]
        idx = self._segment_index(t)
        for k, seg in enumerate(self.segments):
            mask = (idx == k) & ~far
            if np.any(mask):
                lo, hi = seg.t_span
                vv, dd = seg(np.clip(t[mask], lo, hi))
                out_v[mask], out_d[mask] = vv, dd
        return out_v, out_d


def _decaying_seed(params: ExponentParams, t_h: float, sigma: float):
    """Asymptotic data of v_p(t + σ) at large t."""
    gm, p = params.gamma_minus, params.p
    c = seed_correction(params)
    e = np.exp(gm * (t_h + sigma))
    return e * (1.0 + c * e ** (p - 1.0)), gm * e + c * p * gm * e**p


def _flow(params: ExponentParams, v0: float, s: float):
    """Autonomous (λ = 0) flow from (v0, 0) for time s."""
    if s == 0:
        return np.array([v0, 0.0])
    traj = integrate(params, v0, 0.0, 0.0, s, atol=ATOL * abs(v0))
    v, dv = traj(s)
    return np.array([v[0], dv[0]])


def _segment_trajectory(cfg: MatchConfig, y_end, t_start: float, t_stop: float) -> Trajectory:
    params = cfg.params
    scale = max(abs(y_end[0]), 1e-300)
    return integrate(params, y_end[0], y_end[1], t_start, t_stop, lambda_term=cfg.lam, atol=ATOL * scale)


def solve_segment(config: MatchConfig, profile: HeteroclinicProfile, i: int, alpha: float = 0.0,
                  shift: float = 0.0, grid=None) -> Trajectory:
    """Piece W_i on [T_{2i}, T_{2i+2}] of the full equation."""
    ell = config.ell
    if not 0 <= i < ell:
        raise DomainError(f"segment index {i} outside 0..{ell - 1}")
    T = build_grid(profile, ell, config.xi) if grid is None else grid
    params = config.params
    crit = profile.critical
    lo = T[2 * i]
    if i == ell - 1:
        anchor = outer_anchor(profile, ell, config.xi)
        horizon = anchor + max(40.0, 4.0 * np.log(1.0 / config.eps))
        sigma = crit.t_min[ell - 1] - config.xi
        y = _decaying_seed(params, horizon, sigma)
        return _segment_trajectory(config, y, horizon, lo)
    top = T[2 * i + 2]
    y = _flow(params, crit.epsv[ell - 2 - i] + alpha, shift)
    return _segment_trajectory(config, y, top, lo)


def match_all(config: MatchConfig, profile: HeteroclinicProfile | None = None, tol: float = 1e-12,
              max_iter: int = 20, enforce_region: bool = True) -> PiecewiseSolution:
    """Glue the ℓ pieces by Newton on (α_i, t_i), outermost interface first."""
    ell = config.ell
    if profile is None:
        profile = heteroclinic_for(config.N, config.eps, ell + 1)
    params = config.params
    T = build_grid(profile, ell, config.xi)
    crit = profile.critical
    warn = []
    segs = [None] * ell
    segs[ell - 1] = solve_segment(config, profile, ell - 1, grid=T)
    horizon = segs[ell - 1].t_span[1]
    alphas = np.zeros(max(ell - 1, 0))
    shifts = np.zeros(max(ell - 1, 0))
    mismatch = 0.0
    g = config.trust_gamma
    a_max, t_max = config.eps ** (g / 2), config.eps ** ((g - 1) / 2)
    for k in range(ell - 1, 0, -1):
        Tk = T[2 * k]
        target = np.array([c[0] for c in segs[k](Tk)])
        base = crit.epsv[ell - 1 - k]

        def R(u):
            return _flow(params, base + u[0], u[1]) - target

        u = np.zeros(2)
        r = R(u)
        for _ in range(max_iter):
            if np.max(np.abs(r)) <= tol:
                break
            J = np.empty((2, 2))
            h = 1e-8
            for j in range(2):
                e = np.zeros(2)
                e[j] = h
                J[:, j] = (R(u + e) - R(u - e)) / (2 * h)
            u = u - np.linalg.solve(J, r)
            r = R(u)
        else:
            if np.max(np.abs(r)) > tol:
                raise MatchingError(f"interface {k} stagnated", last_iterate=u, residual=float(np.max(np.abs(r))))
        if enforce_region and (abs(u[0]) > a_max or abs(u[1]) > t_max):
            raise RegionError(f"(alpha, t) = {u} outside trust region ({a_max}, {t_max})")
        alphas[k - 1], shifts[k - 1] = u
        mismatch = max(mismatch, float(np.max(np.abs(r))))
        y = _flow(params, base + u[0], u[1])
        segs[k - 1] = _segment_trajectory(config, y, Tk, T[2 * k - 2])
    for k, seg in enumerate(segs):
        if k >= 1 and np.any(seg.v <= 0):
            raise DomainError(f"segment {k} is not positive")
        lo = seg.t_span[0]
        if config.lam and abs(config.lam) * np.exp(-2 * lo) > params.b_p / 2:
            warn.append(f"lambda term dominates on segment {k}")
    return PiecewiseSolution(T, tuple(segs), alphas, shifts, mismatch, horizon, config, tuple(warn))


# ---------------------------------------------------------------------------
# profiles in the original variable

@dataclass(frozen=True)
class RadialProfile:
    r_samples: np.ndarray
    u: np.ndarray
    lam: float
    p: float
    N: int
    evaluator: object = field(default=None, repr=False, compare=False)  # r -> u(r)
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.evaluator is not None:
            return self.evaluator(r)
        from scipy.interpolate import CubicSpline

        return CubicSpline(np.log(self.r_samples), self.u)(np.log(r))

    def emden_fowler(self, r=None):
        r = self.r_samples if r is None else np.asarray(r, dtype=float)
        return r ** (2.0 / (self.p - 1.0)) * self(r)


def default_r_grid(config: MatchConfig, per_unit: int = 400, t_extra: float = 3.0) -> np.ndarray:
    """Log-spaced radii covering every bump of the tower."""
    prof = heteroclinic_for(config.N, config.eps, config.ell + 1)
    crit = prof.critical
    t_top = crit.t_max[0] - crit.t_min[config.ell - 1] + config.xi + t_extra
    n = int(per_unit * t_top)
    return np.exp(-np.linspace(t_top, 0.0, n + 1))


def assemble_u(solution: PiecewiseSolution, config: MatchConfig, r_grid=None) -> RadialProfile:
    """u(r) = r^{-2/(p-1)} v(-log r) sampled on r_grid ⊂ (0, 1]."""
    r = default_r_grid(config) if r_grid is None else np.asarray(r_grid, dtype=float)
    if np.any(r <= 0) or np.any(r > 1 + 1e-15) or np.any(np.diff(r) <= 0):
        raise DomainError("r_grid must be increasing in (0, 1]")
    q = 2.0 / (config.params.p - 1.0)

    def ev(rr):
        rr = np.asarray(rr, dtype=float)
        return rr ** (-q) * solution.v(-np.log(np.minimum(rr, 1.0)))[0]

    return RadialProfile(r, ev(r), config.lam, config.params.p, config.N, ev,
                         {"mismatch": solution.mismatch})


def pde_residual(profile: RadialProfile) -> float:
    """max |u'' + (N-1)u'/r + λu + u^p| / max |u^p| by 3-point differences."""
    r, u = profile.r_samples, profile.u
    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    d2 = 2 * (hm * u[2:] - (hm + hp) * u[1:-1] + hp * u[:-2]) / (hm * hp * (hm + hp))
    d1 = (hm**2 * u[2:] + (hp**2 - hm**2) * u[1:-1] - hp**2 * u[:-2]) / (hm * hp * (hm + hp))
    uc = u[1:-1]
    res = d2 + (profile.N - 1) * d1 / r[1:-1] + profile.lam * uc + np.abs(uc) ** profile.p
    return float(np.max(np.abs(res)) / np.max(np.abs(u) ** profile.p))


def count_bumps(profile: RadialProfile, r=None) -> int:
    """Number of interior local maxima of r^{2/(p-1)} u."""
    v = profile.emden_fowler(r)
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])
    return int(np.sum(inner))


# ---------------------------------------------------------------------------
# independent oracle: shoot u'' + (N-1)u'/r + λu + |u|^{p-1}u = 0 in r

R0 = 1e-6


def radial_shoot(N: int, p: float, lam: float, A: float, r_max: float, events=None, r0: float = R0):
    """Integrate the radial ODE from the series data at r0."""
    f0 = A**p + lam * A
    u0 = A - f0 * r0**2 / (2 * N)
    du0 = -f0 * r0 / N

    def fun(r, y):
        return [y[1], -(N - 1) / r * y[1] - lam * y[0] - abs(y[0]) ** (p - 1) * y[0]]

    sol = solve_ivp(fun, (r0, r_max), [u0, du0], method="DOP853", rtol=RTOL, atol=1e-14 * A,
                    dense_output=True, events=events)
    if sol.status == -1:
        raise BlowUpError(sol.message)
    return sol


def _ef_derivative_event(p):
    q = 2.0 / (p - 1.0)

    def ev(r, y):
        return q * y[0] + r * y[1]   # sign of d/dr (r^q u)
    return ev


def _ef_minima_radii(sol, p, N, lam):
    """Radii of interior minima and maxima of v = r^q u along a solution."""
    q = 2.0 / (p - 1.0)
    mins, maxs = [], []
    for r, y in zip(sol.t_events[0], sol.y_events[0]):
        # second derivative sign of r^q u at a critical point
        d2 = q * (q - 1) * r ** (q - 2) * y[0] + 2 * q * r ** (q - 1) * y[1] + r**q * (
            -(N - 1) / r * y[1] - lam * y[0] - abs(y[0]) ** (p - 1) * y[0])
        (mins if d2 > 0 else maxs).append(r)
    return np.array(mins), np.array(maxs)


def shooting_oracle(N: int, p: float, lam: float, ell: int, r_grid=None, scan=None) -> RadialProfile:
    """Radial solution on (0, 1] whose Emden-Fowler variable has its ℓ-th minimum at r = 1.

    λ = 0 uses the scaling u_s(r) = s^{2/(p-1)} u(s r); λ > 0 bisects the
    boundary map B(A) = u'(1) + (2/(p-1)) u(1) in the amplitude A.
    """
    if not p > (N + 2) / (N - 2):
        raise DomainError("oracle needs p > p_N")
    if lam < 0:
        raise DomainError("oracle needs lambda >= 0")
    q = 2.0 / (p - 1.0)
    ev = _ef_derivative_event(p)

    if lam == 0:
        ev1 = _ef_derivative_event(p)
        ev1.terminal = 2 * ell
        sol = radial_shoot(N, p, 0.0, 1.0, 1e12, events=[ev1])
        mins, maxs = _ef_minima_radii(sol, p, N, 0.0)
        if len(mins) < ell:
            raise BranchNotFoundError(f"only {len(mins)} minima of r^q u found")
        A = float(mins[ell - 1] ** q)
    else:
        A = _bisect_amplitude(N, p, lam, ell, scan)

    sol = radial_shoot(N, p, lam, A, 1.0, events=[ev])
    mins, maxs = _ef_minima_radii(sol, p, N, lam)
    r = np.exp(-np.linspace(np.log(1.0 / R0) - 1e-9, 0.0, 40001)) if r_grid is None else np.asarray(r_grid)
    r = np.clip(r, R0, 1.0)
    evaluator = lambda rr: sol.sol(np.clip(np.asarray(rr, dtype=float), R0, 1.0))[0]
    u1, du1 = sol.y[0, -1], sol.y[1, -1]
    meta = {"amplitude": A, "boundary_map": float(du1 + q * u1),
            "interior_maxima": int(np.sum(maxs < 1.0 - 1e-9))}
    return RadialProfile(r, evaluator(r), float(lam), float(p), int(N), evaluator, meta)


def _boundary_map(N, p, lam, A):
    q = 2.0 / (p - 1.0)
    ev = _ef_derivative_event(p)
    sol = radial_shoot(N, p, lam, A, 1.0, events=[ev])
    mins, maxs = _ef_minima_radii(sol, p, N, lam)
    return float(sol.y[1, -1] + q * sol.y[0, -1]), len(maxs), len(mins)


def _bisect_amplitude(N, p, lam, ell, scan=None):
    base = shooting_oracle(N, p, 0.0, ell).meta["amplitude"]
    grid = base * np.logspace(-0.5, 0.5, 41) if scan is None else np.asarray(scan)
    vals = [_boundary_map(N, p, lam, A) for A in grid]
    for k in range(len(grid) - 1):
        b0, nmax0, nmin0 = vals[k]
        b1, nmax1, nmin1 = vals[k + 1]
        # a minimum crosses r = 1 where B goes from + (inside) to - ... accept either order,
        # but require ℓ maxima and ℓ-1 interior minima on one side
        if np.sign(b0) != np.sign(b1) and ell in (nmax0, nmax1) and ell - 1 in (nmin0, nmin1):
            f = lambda A: _boundary_map(N, p, lam, A)[0]
            A = brentq(f, grid[k], grid[k + 1], xtol=1e-14 * grid[k], rtol=1e-14)
            _, nmax, nmin = _boundary_map(N, p, lam, A * (1 - 1e-9))
            if nmax == ell:
                return A
    raise BranchNotFoundError("no sign change of the boundary map on the amplitude scan")


def sup_relative_difference(a: RadialProfile, b: RadialProfile, r_lo: float, r_hi: float = 1.0,
                            n: int = 4001) -> float:
    r = np.exp(np.linspace(np.log(r_lo), np.log(r_hi), n))
    ua, ub = a(r), b(r)
    return float(np.max(np.abs(ua - ub)) / np.max(np.abs(ub)))


# ---------------------------------------------------------------------------
# boundary-layer expansion

@dataclass(frozen=True)
class ExpansionFit:
    c0: float
    c1: float
    residual: float
    constant_raw: float
    mu_term: float
    predicted_c0: float
    predicted_c1: float


def predicted_coefficients(config: MatchConfig):
    """Leading (constant, r^{2-N}, μ) coefficients of the expansion near r_ε."""
    N, ell, xi, mu = config.N, config.ell, config.xi, config.mu
    c4, c8 = constant("C4", N), constant("C8", N)
    pre = (ell * config.eps) ** 0.5
    c0 = pre * np.sqrt(c4) / 2 * np.exp((N - 2) * xi / 2)
    c1 = pre * np.sqrt(c4) / 2 * np.exp((2 - N) * xi / 2)
    mu_term = -pre * 4 * mu * c8 * ell ** ((4.0 - N) / (N - 2)) / ((N - 2) ** 2 * np.sqrt(c4)) * np.exp(
        (N - 6) * xi / 2)
    return c0, c1, mu_term


def expansion_check(profile: RadialProfile, config: MatchConfig, min_points: int = 20) -> ExpansionFit:
    """Least-squares fit u ≈ c_0 + c_1 r^{2-N} on r ∈ (r_ε/2, min(2r_ε, 1))."""
    N = config.N
    re = config.r_eps
    lo, hi = re / 2, min(2 * re, 1.0)
    r = profile.r_samples
    mask = (r > lo) & (r < hi)
    if np.sum(mask) < min_points:
        raise ResolutionError(f"only {int(np.sum(mask))} samples in the fitting annulus")
    rr, uu = r[mask], profile.u[mask]
    X = np.column_stack([np.ones_like(rr), rr ** (2.0 - N)])
    coef, *_ = np.linalg.lstsq(X, uu, rcond=None)
    res = float(np.max(np.abs(X @ coef - uu)) / np.max(np.abs(uu)))
    p0, p1, mt = predicted_coefficients(config)
    return ExpansionFit(float(coef[0] - mt), float(coef[1]), res, float(coef[0]), float(mt), float(p0), float(p1))
