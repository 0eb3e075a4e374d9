"""Green and Robin functions of the unit ball and of its exterior.

Both geometries share the regular part

    H(y, z) = (1 + |y|²|z|² - 2<y, z>)^{-(N-2)/2},

which for the ball is the image-charge term (|z| |y - z/|z|²|)^{2-N}.
Derivatives up to second order are provided in closed form for the
reduced-energy Hessian.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PositivityError, SingularityError

COINCIDENCE_TOL = 1e-12


class DomainGeometry(str, enum.Enum):
    UnitBall = "ball"
    ExteriorUnitBall = "exterior"


class _NegInfinity:
    """Tagged stand-in for ρ = -∞; deliberately not a float."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NEG_INFINITY"

    def __reduce__(self):
        return (_NegInfinity, ())


NEG_INFINITY = _NegInfinity()


def is_neg_infinity(x) -> bool:
    return x is NEG_INFINITY


def _geometry(g) -> DomainGeometry:
    return DomainGeometry(g)


def check_interior(geometry, y, margin: float = 0.0):
    y = np.asarray(y, dtype=float)
    r2 = float(y @ y)
    geometry = _geometry(geometry)
    inside = r2 < (1.0 - margin) ** 2 if geometry is DomainGeometry.UnitBall else r2 > (1.0 + margin) ** 2
    if not inside:
        raise DomainError(f"point {y} is not interior to {geometry.value}")
    return y


# -- the two kernels: phi = q^alpha with q quadratic ------------------------

def _q_h(y, z):
    return 1.0 + (y @ y) * (z @ z) - 2.0 * (y @ z)


def _kernel_derivs(kind, y, z, N, order=2):
    """Value, first and second derivatives of q^alpha, alpha = (2-N)/2.

    Returns (phi, g_y, g_z, D_yy, D_yz, D_zz) where D_yz[a, b] = ∂²/∂y_a∂z_b.
    """
    n = y.size
    eye = np.eye(n)
    alpha = (2.0 - N) / 2.0
    if kind == "H":
        q = _q_h(y, z)
        qy = 2.0 * (z @ z) * y - 2.0 * z
        qz = 2.0 * (y @ y) * z - 2.0 * y
        qyy = 2.0 * (z @ z) * eye
        qzz = 2.0 * (y @ y) * eye
        qyz = 4.0 * np.outer(y, z) - 2.0 * eye
    else:
        d = y - z
        q = d @ d
        qy, qz = 2.0 * d, -2.0 * d
        qyy, qzz, qyz = 2.0 * eye, 2.0 * eye, -2.0 * eye
    if q <= 0:
        raise SingularityError("kernel evaluated at a singular pair")
    phi = q**alpha
    if order == 0:
        return phi
    c1 = alpha * q ** (alpha - 1.0)
    gy, gz = c1 * qy, c1 * qz
    if order == 1:
        return phi, gy, gz
    c2 = alpha * (alpha - 1.0) * q ** (alpha - 2.0)
    Dyy = c2 * np.outer(qy, qy) + c1 * qyy
    Dzz = c2 * np.outer(qz, qz) + c1 * qzz
    Dyz = c2 * np.outer(qy, qz) + c1 * qyz
    return phi, gy, gz, Dyy, Dyz, Dzz


def robin(geometry, y, z) -> float:
    """Regular part H(y, z); H(x, x) is the Robin function."""
    y = check_interior(geometry, y)
    z = check_interior(geometry, z)
    return float(_q_h(y, z) ** ((2.0 - y.size) / 2.0))


def green(geometry, y, z) -> float:
    """G(y, z) = |y - z|^{2-N} - H(y, z)."""
    y = check_interior(geometry, y)
    z = check_interior(geometry, z)
    d = y - z
    r2 = float(d @ d)
    if r2 <= COINCIDENCE_TOL**2:
        raise SingularityError("green evaluated at coincident points")
    N = y.size
    return r2 ** ((2.0 - N) / 2.0) - _q_h(y, z) ** ((2.0 - N) / 2.0)


def grad_fields(geometry, y, z):
    """(∇_y G(y, z), ∇_y H(y, z)).

    For y = z only the Robin gradient ∇_x H(x, x) is meaningful; it is
    returned as the second entry and the first is NaN.
    """
    y = check_interior(geometry, y)
    z = check_interior(geometry, z)
    N = y.size
    if np.allclose(y, z, atol=COINCIDENCE_TOL, rtol=0):
        _, gy, gz = _kernel_derivs("H", y, y, N, order=1)
        return np.full(N, np.nan), gy + gz
    _, hy, _ = _kernel_derivs("H", y, z, N, order=1)
    _, sy, _ = _kernel_derivs("S", y, z, N, order=1)
    return sy - hy, hy


def robin_derivs(y, N):
    """Robin function R(x) = H(x, x) with gradient and Hessian."""
    phi, gy, gz, Dyy, Dyz, Dzz = _kernel_derivs("H", y, y, N)
    return phi, gy + gz, Dyy + Dyz + Dyz.T + Dzz


def offdiag_derivs(y, z, N):
    """K = -G = H - |y-z|^{2-N} with first and second derivatives."""
    h = _kernel_derivs("H", y, z, N)
    s = _kernel_derivs("S", y, z, N)
    return tuple(a - b for a, b in zip(h, s))


# -- interaction matrix ------------------------------------------------------

@dataclass(frozen=True)
class InteractionMatrix:
    m: int
    points: np.ndarray
    entries: np.ndarray
    degenerate: bool


def interaction_matrix(geometry, points) -> InteractionMatrix:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m, N = pts.shape
    for x in pts:
        check_interior(geometry, x)
    M = np.zeros((m, m))
    degenerate = False
    for i in range(m):
        M[i, i] = _q_h(pts[i], pts[i]) ** ((2.0 - N) / 2.0)
        for j in range(i + 1, m):
            d = pts[i] - pts[j]
            if np.sqrt(d @ d) <= COINCIDENCE_TOL:
                degenerate = True
                M[i, j] = M[j, i] = np.nan
                continue
            M[i, j] = M[j, i] = -green(geometry, pts[i], pts[j])
    return InteractionMatrix(m, pts, M, degenerate)


def jacobi_eigh(A, tol: float = 1e-13, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for small symmetric matrices.

    Returns (eigenvalues ascending, eigenvectors as columns).
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(A)))
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A**2) - np.sum(np.diag(A) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = s, -s
                A = J.T @ A @ J
                V = V @ J
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


@dataclass(frozen=True)
class SpectralData:
    rho: object  # float or NEG_INFINITY
    r_vec: np.ndarray | None


def least_eigenpair(M: InteractionMatrix) -> SpectralData:
    if M.degenerate:
        return SpectralData(NEG_INFINITY, None)
    w, V = jacobi_eigh(M.entries)
    r = V[:, 0]
    r = r / np.linalg.norm(r)
    if np.sum(r) < 0:
        r = -r
    if np.any(r <= 0):
        raise PositivityError(f"least eigenvector {r} is not positive")
    return SpectralData(float(w[0]), r)


def harmonic_mode_dtn(N: int, order: int, radius: float) -> float:
    """radius·(∂_n V - ∂_n W) for unit spherical-harmonic data of given order.

    V ∝ r^k inside, W ∝ r^{2-N-k} outside, both equal to 1 on the sphere.
    """
    if order < 1:
        raise DomainError("order 0 is excluded")
    if radius <= 0:
        raise DomainError("radius must be positive")
    k = order
    dV = k / radius               # d/dr (r/R)^k at r = R
    dW = (2.0 - N - k) / radius   # d/dr (r/R)^{2-N-k} at r = R
    return float(radius * (dV - dW))
