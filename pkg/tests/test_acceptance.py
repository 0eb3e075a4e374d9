"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the verdict lines are repeated
in the terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np

from _configs import fd_gradient, fd_jacobian, random_configs
from bubbletower.constants import constant
from bubbletower.green import DomainGeometry, interaction_matrix
from bubbletower.params import critical_exponent, derive_params, hamiltonian, profile_w0, profile_w0_derivative, \
    profile_wp
from bubbletower.phase_plane import beta_ell, integrate, shoot_heteroclinic
from bubbletower.radial import (MatchConfig, assemble_u, count_bumps, expansion_check, match_all, shooting_oracle,
                                sup_relative_difference)
from bubbletower.reduced_energy import (ReducedConfiguration, a_star_residual, evaluate_F, fold_threshold,
                                        gradient_F, hessian_F, scenario_ball, scenario_exterior_pair, solve_a_star)
from bubbletower.tower import residual_and_energy, synthesize, tower_from_critical

N = 6
SWEEP = (1e-2, 1e-3, 1e-4, 1e-5)
VERDICTS = []


def verdict(number, title, checks, detail=""):
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}"
    if detail:
        line += f" | {detail}"
    if failed:
        line += f" | failing: {', '.join(failed)}"
    VERDICTS.append(line)
    print(line)
    assert ok, line


_PROFILES = {}


def heteroclinics():
    if not _PROFILES:
        for eps in SWEEP:
            _PROFILES[eps] = shoot_heteroclinic(derive_params(N, eps), 3)
    return _PROFILES


def test_criterion_01_constants():
    t0 = time.perf_counter()
    c4q, c4 = constant("C4", N, "quadrature"), constant("C4", N)
    c5q, c5 = constant("C5", N, "quadrature"), constant("C5", N)
    c3q, c3 = constant("C3", N, "quadrature"), constant("C3", N)
    dt = time.perf_counter() - t0
    verdict(1, "constants closed form vs quadrature", {
        "C4 = 76.8": abs(c4 - 76.8) <= 1e-9 and abs(c4q - 76.8) <= 1e-9,
        "C5 = 192": abs(c5 - 192.0) <= 1e-9 and abs(c5q - 192.0) <= 1e-9,
        "C3 = 96 pi^3": abs(c3 / (96 * np.pi**3) - 1) <= 1e-9 and abs(c3q / (96 * np.pi**3) - 1) <= 1e-9,
        "runtime < 1 s": dt < 1.0,
    }, f"C4={c4:.12g} C5={c5:.12g} (quadrature {c5q:.12g}) C3/96pi^3={c3 / (96 * np.pi**3):.15g} t={dt:.2f}s")


def _aitken(f):
    a, b, c = f[-3:]
    den = (c - b) - (b - a)
    return c - (c - b) ** 2 / den


def test_criterion_02_minimum_levels():
    t0 = time.perf_counter()
    profs = heteroclinics()
    c4 = constant("C4", N)
    checks, parts = {}, []
    for i in (1, 2, 3):
        f = [profs[e].critical.epsv[i - 1] ** 2 / (i * e) for e in SWEEP]
        d = np.diff(f)
        lim = _aitken(f)
        checks[f"monotone i={i}"] = bool(np.all(d > 0) or np.all(d < 0))
        checks[f"extrapolation i={i}"] = abs(lim / c4 - 1) <= 0.02
        parts.append(f"i={i}: {' '.join(f'{x:.3f}' for x in f)} -> {lim:.3f}")
    dt = time.perf_counter() - t0
    checks["runtime < 30 s"] = dt < 30.0
    verdict(2, "minimum levels eps_{p,i}^2/(i eps) -> C4", checks, "; ".join(parts) + f" t={dt:.1f}s")


def test_criterion_03_spacing():
    profs = heteroclinics()
    checks, parts = {}, []
    for i in (1, 2, 3):
        off = [profs[e].critical.t_min[i - 1] - (2 * i - 1) / (N - 2) * np.log(e) for e in SWEEP]
        spread = max(off) - min(off)
        checks[f"i={i}"] = spread <= 1.0
        parts.append(f"i={i} spread {spread:.3f}")
    verdict(3, "minimum spacing offsets bounded", checks, ", ".join(parts))


def test_criterion_04_beta():
    profs = heteroclinics()
    c8 = constant("C8", N)
    checks, parts = {}, []
    for ell in (1, 2):
        errs = [abs(beta_ell(profs[e], ell) / (ell * e) ** (2 / (N - 2)) / c8 - 1) for e in (1e-3, 1e-4)]
        checks[f"ell={ell} within 15%"] = max(errs) <= 0.15
        checks[f"ell={ell} improving"] = errs[1] < errs[0]
        parts.append(f"ell={ell} rel err {errs[0]:.4f} -> {errs[1]:.4f}")
    verdict(4, "beta_{p,ell} normalised by (ell eps)^{1/2} -> C8", checks, ", ".join(parts))


def test_criterion_05_reduced_derivatives():
    t0 = time.perf_counter()
    worst_g, worst_h = 0.0, 0.0
    for geometry in (DomainGeometry.UnitBall, DomainGeometry.ExteriorUnitBall):
        for cfg in random_configs(geometry, 20, m=2, seed=5):
            z = cfg.pack()
            g = gradient_F(cfg)
            H = hessian_F(cfg)
            g_fd = fd_gradient(lambda w: evaluate_F(cfg.with_vector(w)), z)
            H_fd = fd_jacobian(lambda w: gradient_F(cfg.with_vector(w)), z)
            worst_g = max(worst_g, float(np.max(np.abs(g_fd - g)) / np.max(np.abs(g))))
            worst_h = max(worst_h, float(np.max(np.abs(H_fd - H)) / np.max(np.abs(H))))
    dt = time.perf_counter() - t0
    verdict(5, "reduced energy gradient and Hessian vs finite differences", {
        "gradient 1e-6": worst_g <= 1e-6, "Hessian 1e-4": worst_h <= 1e-4, "runtime < 5 s": dt < 5.0,
    }, f"gradient {worst_g:.2e}, Hessian {worst_h:.2e}, t={dt:.2f}s")


def test_criterion_06_ball_scenario():
    mu_star = fold_threshold(N, 1)
    above = scenario_ball(N, 1, 1.05 * mu_star)
    verdict(6, "single point in the ball: fold and two critical points", {
        "two above the fold": len(above) == 2 and all(c.nondegenerate for c in above),
        "none at mu = 0": len(scenario_ball(N, 1, 0.0)) == 0,
        "none below the fold": len(scenario_ball(N, 1, 0.95 * mu_star)) == 0,
    }, f"fold threshold {mu_star:.12f}")


def test_criterion_07_exterior_pair():
    a = solve_a_star(N)
    res = a_star_residual(N, a)
    cp = scenario_exterior_pair(N, 1)
    verdict(7, "antipodal exterior pair", {
        "a_* residual": abs(res) <= 1e-13, "a_* > 1": a > 1, "reduced gradient": cp.grad_norm <= 1e-8,
    }, f"a_*={a:.15f} residual {res:.1e} gradient {cp.grad_norm:.1e}")


def test_criterion_08_radial_vs_oracle():
    t0 = time.perf_counter()
    checks, parts = {}, []
    for ell in (1, 2):
        cfg = MatchConfig(N, 1e-3, 0.0, ell, 0.0)
        sol = match_all(cfg)
        prof = assemble_u(sol, cfg)
        oracle = shooting_oracle(N, cfg.params.p, 0.0, ell)
        diff = sup_relative_difference(prof, oracle, cfg.r_eps)
        checks[f"ell={ell} oracle"] = diff <= 1e-2
        checks[f"ell={ell} mismatch"] = sol.mismatch <= 1e-10
        checks[f"ell={ell} bumps"] = count_bumps(prof) == ell
        parts.append(f"ell={ell} diff {diff:.1e} mismatch {sol.mismatch:.1e}")
    dt = time.perf_counter() - t0
    checks["runtime < 60 s"] = dt < 60.0
    verdict(8, "matched radial tower vs amplitude shooting", checks, ", ".join(parts) + f" t={dt:.1f}s")


def test_criterion_09_boundary_expansion():
    fits = {}
    for xi in (0.0, 0.2):
        cfg = MatchConfig(N, 1e-4, 0.0, 1, xi)
        fits[xi] = expansion_check(assemble_u(match_all(cfg), cfg), cfg)
    target = np.sqrt(1e-4 * constant("C4", N)) / 2
    f0 = fits[0.0]
    ratio = fits[0.2].c0 / f0.c0
    verdict(9, "boundary-layer expansion coefficients", {
        "c0 within 15%": abs(f0.c0 / target - 1) <= 0.15,
        "c1 within 15%": abs(f0.c1 / target - 1) <= 0.15,
        "xi ratio within 10%": abs(ratio / np.exp((N - 2) * 0.2 / 2) - 1) <= 0.10,
    }, f"c0/target {f0.c0 / target:.4f}, c1/target {f0.c1 / target:.4f}, ratio {ratio:.4f} "
       f"vs {np.exp(0.4):.4f}")


def test_criterion_10_tower_mass():
    cp = scenario_ball(N, 2, 30.0)[0]
    c3 = constant("C3", N)
    res, masses = [], None
    for eps in (1e-2, 1e-3, 1e-4):
        spec = tower_from_critical(cp.config.x, cp.config.Lambda, [2], N, eps)
        r, m = residual_and_energy(synthesize(spec), spec.p)
        res.append(r)
        masses = m
    verdict(10, "two-bubble tower energy and residual", {
        "mass within 5% of 2 C3": abs(masses[0] / (2 * c3) - 1) <= 0.05,
        "residual decreasing": res[0] > res[1] > res[2],
    }, f"mass/(2 C3) = {masses[0] / (2 * c3):.4f}, residuals {' '.join(f'{r:.4f}' for r in res)}")


def test_criterion_11_invariants():
    t0 = time.perf_counter()
    checks = {}
    # Hamiltonian monotonicity and the cap below d_p along orbits with H <= 0
    P = derive_params(N, 1e-2)
    viol, cap = 0.0, True
    for v0, dv0 in [(0.5, 0.0), (1.2, -0.3), (2.0, 0.4), (P.c_p * 1.01, 0.0)]:
        if hamiltonian(P, v0, dv0) > 0:
            continue
        tr = integrate(P, v0, dv0, 0.0, 8.0)
        H = tr.hamiltonian()
        viol = max(viol, float(-np.min(np.diff(H))))
        cap &= bool(np.all(np.abs(tr.v[H <= 0]) <= P.d_p + 1e-8))
    checks["Hamiltonian monotone"] = viol <= 1e-10
    checks["cap"] = cap
    # interlacing of extrema along the heteroclinic
    checks["interlacing"] = all(p.critical.check_invariants() for p in heteroclinics().values())
    # interaction-matrix sign class
    rng = np.random.default_rng(3)
    sign_ok = True
    for geometry, lo, hi in ((DomainGeometry.UnitBall, 0.1, 0.8), (DomainGeometry.ExteriorUnitBall, 1.2, 3.0)):
        for _ in range(10):
            pts = []
            for _ in range(3):
                d = rng.normal(size=N)
                pts.append(rng.uniform(lo, hi) * d / np.linalg.norm(d))
            E = interaction_matrix(geometry, pts).entries
            sign_ok &= bool(np.all(np.diag(E) > 0) and np.all(E[~np.eye(3, dtype=bool)] < 0))
    checks["sign class"] = sign_ok
    # √k scaling at mu = 0
    c = scenario_exterior_pair(N, 1).config
    g_k = max(float(np.linalg.norm(gradient_F(ReducedConfiguration(c.geometry, np.sqrt(k) * c.Lambda, c.x, 0.0,
                                                                   k * c.ells)))) for k in (2, 3))
    checks["sqrt(k) scaling"] = g_k <= 1e-10
    # closed-form profiles
    t = np.linspace(-20, 20, 4001)
    w, dw = profile_w0(N, t), profile_w0_derivative(N, t)
    pn, kk = critical_exponent(N), ((N - 2) / 2) ** 2
    w0_res = float(np.max(np.abs(dw**2 / 2 - kk * w**2 / 2 + w ** (pn + 1) / (pn + 1))) / np.max(w) ** 2)
    checks["w0 residual"] = w0_res <= 1e-10
    Pp = derive_params(N, 1e-3)
    tt = np.linspace(-10, 10, 2001)
    wp = [profile_wp(Pp, tt, k) for k in range(3)]
    wp_res = float(np.max(np.abs(wp[2] - Pp.a_p * wp[1] - Pp.b_p * wp[0]) / np.maximum(1.0, np.abs(wp[0]))))
    checks["w_p residual"] = wp_res <= 1e-10
    dt = time.perf_counter() - t0
    checks["runtime < 10 s"] = dt < 10.0
    verdict(11, "structural invariants", checks,
            f"H violation {viol:.1e}, sqrt(k) gradient {g_k:.1e}, w0 {w0_res:.1e}, w_p {wp_res:.1e}, t={dt:.1f}s")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted((k, v) for k, v in dict(globals()).items() if k.startswith("test_criterion")):
        try:
            fn()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
