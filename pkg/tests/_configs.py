"""Deterministic random admissible configurations shared by several test modules."""

import numpy as np

from bubbletower.green import DomainGeometry
from bubbletower.reduced_energy import ReducedConfiguration


def random_configs(geometry, count, m=2, N=6, seed=7):
    rng = np.random.default_rng(seed)
    geometry = DomainGeometry(geometry)
    out = []
    while len(out) < count:
        pts = []
        for _ in range(m):
            d = rng.normal(size=N)
            d /= np.linalg.norm(d)
            r = rng.uniform(0.05, 0.7) if geometry is DomainGeometry.UnitBall else rng.uniform(1.3, 3.0)
            pts.append(r * d)
        pts = np.array(pts)
        if m > 1 and min(np.linalg.norm(pts[i] - pts[j]) for i in range(m) for j in range(i + 1, m)) < 0.2:
            continue
        lam = rng.uniform(0.5, 3.0, size=m)
        mu = rng.uniform(0.0, 5.0)
        ells = rng.integers(1, 4, size=m)
        out.append(ReducedConfiguration(geometry, lam, pts, mu, ells))
    return out


def fd_gradient(F, z, h=1e-6):
    g = np.zeros_like(z)
    for k in range(z.size):
        e = np.zeros_like(z)
        e[k] = h
        g[k] = (F(z + e) - F(z - e)) / (2 * h)
    return g


def fd_jacobian(G, z, h=1e-4):
    n = z.size
    J = np.zeros((n, n))
    for k in range(n):
        e = np.zeros_like(z)
        e[k] = h
        J[:, k] = (G(z + e) - G(z - e)) / (2 * h)
    return J
