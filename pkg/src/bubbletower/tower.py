"""Multi-point bubble towers assembled from a reduced critical point.

Near each concentration point x_i the profile is the sum of ℓ_i standard
bubbles with scales ε̄_{i,j} = d_{i,j} ε^{(1-2j)/(N-2)}; away from the points
it is the Green far field Σ Λ_i ε^{1/2} G(·, x_i).  The two descriptions are
compared on the annulus r_ε/2 < |x - x_i| < 2r_ε and the mismatch reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .constants import constant, sphere_area
from .errors import CountError, DomainError, GeometryError, ResolutionError
from .green import DomainGeometry, green
from .params import critical_exponent
from .radial import MatchConfig, RadialProfile, assemble_u, match_all

D_BOUND = 1e3   # recorded c in 1/c < d < c


def lambda_from_mu(N: int, eps: float, mu: float) -> float:
    if not eps > 0:
        raise DomainError("eps must be positive")
    return float(mu * eps ** ((N - 4.0) / (N - 2.0)))


def xi_from_lambda_i(N: int, Lambda_i: float, ell_i: int) -> float:
    if not Lambda_i > 0:
        raise DomainError("Lambda_i must be positive")
    return float(-(2.0 / (N - 2.0)) * np.log(2.0 * Lambda_i / np.sqrt(ell_i * constant("C4", N))))


def bubble_amplitude(N: int) -> float:
    return (N * (N - 2.0)) ** ((N - 2.0) / 4.0)


def bubble(N: int, scale: float, r):
    """Standard bubble A (ε̄/(1 + ε̄² r²))^{(N-2)/2}."""
    r = np.asarray(r, dtype=float)
    return bubble_amplitude(N) * (scale / (1.0 + (scale * r) ** 2)) ** ((N - 2.0) / 2.0)


def scale_power(N: int, eps: float, j: int) -> float:
    """(ε^{1/2-j})^{2/(N-2)}."""
    return eps ** ((1.0 - 2.0 * j) / (N - 2.0))


# ---------------------------------------------------------------------------
# scale fitting

def _ef_maxima(profile: RadialProfile):
    r = profile.r_samples
    v = profile.emden_fowler()
    k = np.nonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]))[0] + 1
    q = 2.0 / (profile.p - 1.0)
    f = lambda s: np.exp(q * s) * float(np.ravel(profile(np.exp(s)))[0])
    h = 1e-5
    df = lambda s: (f(s + h) - f(s - h)) / (2 * h)
    out = []
    for i in k:
        # u(r_j) is first-order sensitive to r_j, so locate the maximum as a derivative root
        lo, hi = np.log(r[i - 1]), np.log(r[i + 1])
        out.append(float(np.exp(brentq(df, lo, hi, xtol=1e-14, rtol=1e-14))))
    return np.array(sorted(out, reverse=True))   # outermost bump first


def fit_bubble_scales(profile: RadialProfile, N: int, eps: float, ell: int | None = None) -> list:
    """Scale coefficients d_j, j = 1 (outermost bump) .. ℓ (innermost).

    At a maximum r_j of r^{(N-2)/2} u a single bubble takes the value
    2^{-(N-2)/2} times its peak, so the peak is read as 2^{(N-2)/2} u(r_j).
    """
    r_max = _ef_maxima(profile)
    if ell is not None and r_max.size != ell:
        raise CountError(f"found {r_max.size} bumps, expected {ell}")
    if r_max.size == 0:
        raise CountError("profile has no bumps")
    out = []
    for j, rj in enumerate(r_max, start=1):
        peak = 2.0 ** ((N - 2.0) / 2.0) * float(np.ravel(profile(rj))[0])
        eb = (peak / bubble_amplitude(N)) ** (2.0 / (N - 2.0))
        out.append(float(eb / scale_power(N, eps, j)))
    return out


def radial_scales(N: int, eps: float, ell: int, mu: float = 0.0, xi: float = 0.0) -> list:
    """d_j read off the matched radial tower on the unit ball."""
    cfg = MatchConfig(N, eps, mu, ell, xi)
    return fit_bubble_scales(assemble_u(match_all(cfg), cfg), N, eps, ell)


# ---------------------------------------------------------------------------
# tower specification

@dataclass(frozen=True)
class TowerSpec:
    N: int
    eps: float
    mu: float
    points: np.ndarray
    ells: tuple
    Lambda: np.ndarray
    d: tuple
    xi: np.ndarray
    geometry: DomainGeometry = DomainGeometry.UnitBall
    c_bound: float = D_BOUND

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        lam = np.atleast_1d(np.asarray(self.Lambda, dtype=float))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "Lambda", lam)
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        object.__setattr__(self, "ells", tuple(int(e) for e in self.ells))
        object.__setattr__(self, "d", tuple(tuple(float(x) for x in row) for row in self.d))
        object.__setattr__(self, "geometry", DomainGeometry(self.geometry))
        m = pts.shape[0]
        if pts.shape[1] != self.N:
            raise DomainError("points must live in R^N")
        if not (lam.size == len(self.ells) == len(self.d) == self.xi.size == m):
            raise DomainError("per-point fields must have length m")
        if not self.eps > 0:
            raise DomainError("eps must be positive")
        for row, ell in zip(self.d, self.ells):
            if len(row) != ell:
                raise DomainError("each d row needs ℓ_i entries")
            if any(not (1.0 / self.c_bound < x < self.c_bound) for x in row):
                raise DomainError(f"scale coefficients {row} outside (1/c, c)")

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> float:
        return critical_exponent(self.N) + self.eps

    @property
    def lam(self) -> float:
        return lambda_from_mu(self.N, self.eps, self.mu)

    @property
    def r_eps(self) -> float:
        return self.eps ** (2.0 / (self.N**2 - 4.0))

    def scales(self, i: int) -> np.ndarray:
        return np.array([dj * scale_power(self.N, self.eps, j) for j, dj in enumerate(self.d[i], start=1)])

    def limit_defect(self) -> np.ndarray:
        """Λ_i^{2/(N-2)} d_{i,1} / (N(N-2))^{1/2} - 1."""
        N = self.N
        return np.array([self.Lambda[i] ** (2.0 / (N - 2)) * self.d[i][0] / np.sqrt(N * (N - 2.0)) - 1.0
                         for i in range(self.m)])


def first_scale(N: int, Lambda_i: float) -> float:
    """d_{i,1} from the limit relation Λ^{2/(N-2)} d_{i,1} = (N(N-2))^{1/2}."""
    return float(np.sqrt(N * (N - 2.0)) * Lambda_i ** (-2.0 / (N - 2.0)))


def tower_from_critical(points, Lambda, ells, N: int, eps: float, mu: float = 0.0,
                        geometry=DomainGeometry.UnitBall, inner_scales=None) -> TowerSpec:
    """TowerSpec with d_{i,1} from the limit relation and the deeper d_{i,j} from the radial matcher.

    ``inner_scales`` may supply the rows d_{i,2..ℓ_i} directly.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lam = np.atleast_1d(np.asarray(Lambda, dtype=float))
    ells = [int(e) for e in np.atleast_1d(ells)]
    xi = np.array([xi_from_lambda_i(N, L, e) for L, e in zip(lam, ells)])
    rows = []
    cache = {}
    for i, (L, ell) in enumerate(zip(lam, ells)):
        row = [first_scale(N, L)]
        if ell > 1:
            if inner_scales is not None:
                row.extend(inner_scales[i])
            else:
                key = (ell, round(float(xi[i]), 12))
                if key not in cache:
                    cache[key] = radial_scales(N, eps, ell, mu, float(xi[i]))
                row.extend(cache[key][1:])
        rows.append(row)
    return TowerSpec(N, eps, mu, pts, tuple(ells), lam, tuple(rows), xi, geometry)


# ---------------------------------------------------------------------------
# synthesis

@dataclass(frozen=True)
class TowerProfile:
    spec: TowerSpec
    grids: tuple            # per point: radii (uniform in log r)
    u: tuple                # per point: bubble sums on those radii
    far_points: np.ndarray  # coarse samples between the concentration balls and the boundary
    far_u: np.ndarray
    lam: float
    resolution: int
    stitch: dict = field(default_factory=dict)


def _boundary_distance(geometry: DomainGeometry, x) -> float:
    r = float(np.linalg.norm(x))
    return 1.0 - r if geometry is DomainGeometry.UnitBall else r - 1.0


def far_field(spec: TowerSpec, x) -> float:
    """Σ_i Λ_i ε^{1/2} G(x, x_i)."""
    return float(sum(L * np.sqrt(spec.eps) * green(spec.geometry, x, xi)
                     for L, xi in zip(spec.Lambda, spec.points)))


def near_field(spec: TowerSpec, i: int, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return sum(bubble(spec.N, s, r) for s in spec.scales(i))


def _outer_radius(spec: TowerSpec, i: int) -> float:
    dist = _boundary_distance(spec.geometry, spec.points[i])
    return min(2.0 * spec.r_eps, dist)


def mass_radius(spec: TowerSpec) -> float:
    """r₀ = min(0.25, half the least pairwise distance)."""
    r0 = 0.25
    for i in range(spec.m):
        for j in range(i + 1, spec.m):
            r0 = min(r0, 0.5 * float(np.linalg.norm(spec.points[i] - spec.points[j])))
    return r0


def synthesize(spec: TowerSpec, resolution: int = 512, decades_inside: float = 2.0,
               far_samples: int = 16) -> TowerProfile:
    """Sample the tower on log-radial grids (``resolution`` points per decade) and a far-field grid."""
    if resolution < 8:
        raise ResolutionError("resolution must be at least 8 points per decade")
    N, m = spec.N, spec.m
    for i in range(m):
        for j in range(i + 1, m):
            if np.linalg.norm(spec.points[i] - spec.points[j]) < 4.0 * spec.r_eps:
                raise GeometryError(f"concentration balls of points {i} and {j} overlap")
    r0 = mass_radius(spec)
    grids, us, stitch = [], [], {}
    dirs = np.vstack([np.eye(N), -np.eye(N)])
    far_pts, far_u = [], []
    for i in range(m):
        x_i = spec.points[i]
        r_out = max(_outer_radius(spec, i), min(r0, _boundary_distance(spec.geometry, x_i)))
        r_in = 10.0 ** (-decades_inside) / float(np.max(spec.scales(i)))
        # r₀ is placed on a node so the mass quadrature ends exactly there
        r_mass = min(r0, r_out)
        n0 = int(np.ceil(resolution * np.log10(r_mass / r_in)))
        h = np.log(r_mass / r_in) / n0
        n = n0 + max(int(np.ceil(np.log(r_out / r_mass) / h)), 2)
        r = np.exp(np.log(r_in) + h * np.arange(n + 1))
        grids.append(r)
        us.append(near_field(spec, i, r))
        # stitch: bubble sum against the Green far field on the matching annulus
        lo, hi = spec.r_eps / 2.0, min(2.0 * spec.r_eps, 0.999 * _boundary_distance(spec.geometry, x_i))
        gap, size = 0.0, 0.0
        if hi > lo:
            for rr in np.exp(np.linspace(np.log(lo), np.log(hi), 9)):
                nf = float(near_field(spec, i, rr))
                for e in dirs:
                    ff = far_field(spec, x_i + rr * e)
                    gap, size = max(gap, abs(nf - ff)), max(size, abs(ff))
        worst = gap / size if size > 0 else 0.0
        stitch[i] = {"lo": lo, "hi": hi, "relative_mismatch": worst, "ok": bool(worst <= 0.15)}
        # far-field rays from the ball edge to the boundary
        edge = _boundary_distance(spec.geometry, x_i)
        r_far = np.linspace(r_out, edge, far_samples + 1)[1:] if spec.geometry is DomainGeometry.UnitBall \
            else np.exp(np.linspace(np.log(r_out), np.log(r_out + 10.0), far_samples + 1))[1:]
        for e in dirs:
            for rr in r_far:
                x = x_i + rr * e
                if spec.geometry is DomainGeometry.UnitBall and np.linalg.norm(x) >= 1.0:
                    x = x / np.linalg.norm(x) * (1.0 - 1e-12)
                if spec.geometry is DomainGeometry.ExteriorUnitBall and np.linalg.norm(x) <= 1.0:
                    continue
                far_pts.append(x)
                far_u.append(far_field(spec, x))
    return TowerProfile(spec, tuple(grids), tuple(us), np.array(far_pts), np.array(far_u), spec.lam,
                        int(resolution), stitch)


# ---------------------------------------------------------------------------
# residual and Dirichlet energy

_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _log_derivatives(u, h):
    """First and second derivatives in s = log r on a uniform grid (5-point, interior only)."""
    win = np.lib.stride_tricks.sliding_window_view(u, 5)
    return win @ _D1 / h, win @ _D2 / h**2


def radial_laplacian(r, u):
    """(r[2:-2], Δu) for a radial function sampled uniformly in log r."""
    s = np.log(r)
    h = float(s[1] - s[0])
    if not np.allclose(np.diff(s), h, rtol=1e-8, atol=0):
        raise ResolutionError("grid must be uniform in log r")
    du, d2u = _log_derivatives(u, h)
    return r[2:-2], du, d2u


def residual_and_energy(profile: TowerProfile, p: float):
    """(weighted sup of |Δu + λu + u^p|/(u^p + ε), Dirichlet energy in B(x_i, r₀) per point)."""
    spec = profile.spec
    if profile.resolution < 64:
        raise ResolutionError("residual needs at least 64 points per decade")
    N, eps = spec.N, spec.eps
    r0 = mass_radius(spec)
    area = sphere_area(N)
    res_norm, masses = 0.0, []
    for r, u in zip(profile.grids, profile.u):
        rc, du, d2u = radial_laplacian(r, u)
        uc = u[2:-2]
        lap = (d2u + (N - 2.0) * du) / rc**2
        up = np.abs(uc) ** p
        res = np.abs(lap + profile.lam * uc + up) / (up + eps)
        res_norm = max(res_norm, float(np.max(res)))
        # ∫|∇u|² over B(x_i, r₀) = |S^{N-1}| ∫ u_s² r^{N-2} ds
        mask = rc <= r0 * (1 + 1e-9)
        if rc[mask][-1] < r0 * (1 - 1e-9):
            raise ResolutionError("near-field grid does not reach the mass radius")
        s = np.log(rc[mask])
        f = du[mask] ** 2 * rc[mask] ** (N - 2.0)
        masses.append(float(area * np.trapezoid(f, s)))
    return res_norm, masses
