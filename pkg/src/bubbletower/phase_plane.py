"""Phase-plane analysis of v'' - a_p v' - b_p v + v^p (+ λe^{-2t}v) = 0.

The heteroclinic v_p is obtained by shooting from its decaying end at
t → +∞ and integrating backward into the spiral around c_p.  Extrema are
located on the dense output, not on the sample grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .constants import sech_moment
from .errors import BlowUpError, BracketError, ConditionError, CountError, DomainError, ShootingHorizonError
from .params import ExponentParams, derive_params, hamiltonian, profile_w0, profile_wp

RTOL = 1e-12
ATOL = 1e-14


# ---------------------------------------------------------------------------
# trajectories

@dataclass(frozen=True)
class Trajectory:
    """Solution samples plus piecewise dense interpolants.

    Samples are always stored with ``t`` increasing, whatever the
    integration direction was.
    """

    params: ExponentParams
    t: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    lambda_term: float = 0.0
    pieces: tuple = field(default=(), repr=False)  # (lo, hi, OdeSolution)

    @property
    def t_span(self):
        return float(self.t[0]), float(self.t[-1])

    def __call__(self, t):
        """Return (v, dv) at the requested times from the dense output."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full((2, t.size), np.nan)
        lo, hi = self.t_span
        if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
            raise DomainError(f"evaluation outside trajectory span [{lo}, {hi}]")
        for a, b, sol in self.pieces:
            mask = (t >= a - 1e-12) & (t <= b + 1e-12) & np.isnan(out[0])
            if np.any(mask):
                out[:, mask] = sol(t[mask])
        return out[0], out[1]

    def value(self, t):
        return self(t)[0]

    def hamiltonian(self):
        return hamiltonian(self.params, self.v, self.dv)

    def residual(self, t, h=1e-4):
        """Local ODE residual of the interpolant (centred differences)."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.t_span
        t = np.clip(t, lo + 2 * h, hi - 2 * h)
        v, dv = self(t)
        vp, dvp = self(t + h)
        vm, dvm = self(t - h)
        vpp, dvpp = self(t + 2 * h)
        vmm, dvmm = self(t - 2 * h)
        # fourth-order centred first derivative of v and dv
        dv_fd = (8 * (vp - vm) - (vpp - vmm)) / (12 * h)
        ddv_fd = (8 * (dvp - dvm) - (dvpp - dvmm)) / (12 * h)
        acc = self.params.rhs(v, dv, self.lambda_term, t)
        return np.maximum(np.abs(dv_fd - dv), np.abs(ddv_fd - acc))

    def join(self, other: "Trajectory") -> "Trajectory":
        """Concatenate two trajectories that share an endpoint."""
        t = np.concatenate([self.t, other.t])
        order = np.argsort(t, kind="stable")
        t = t[order]
        keep = np.concatenate([[True], np.diff(t) > 0])
        v = np.concatenate([self.v, other.v])[order][keep]
        dv = np.concatenate([self.dv, other.dv])[order][keep]
        return Trajectory(self.params, t[keep], v, dv, self.lambda_term, self.pieces + other.pieces)

    def to_csv(self, path):
        p = self.params
        with open(path, "w", newline="") as fh:
            fh.write(f"# N={p.N} eps={p.eps:.15g} p={p.p:.15g} lambda={self.lambda_term:.15g}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "v", "dv"])
            for row in zip(self.t, self.v, self.dv):
                w.writerow([f"{x:.15g}" for x in row])


def _solve(fun, y0, t0, t1, rtol, atol, events=None, guard=None):
    """solve_ivp wrapper with a terminal |v| guard."""
    evs = list(events or [])
    if guard is not None:
        def blow(t, y):
            return guard - abs(y[0])
        blow.terminal = True
        evs.append(blow)
    sol = solve_ivp(fun, (t0, t1), np.asarray(y0, dtype=float), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True, events=evs or None)
    if sol.status == -1:
        raise BlowUpError(f"integration failed: {sol.message}",
                          last_state=(sol.t[-1], sol.y[0, -1], sol.y[1, -1]))
    if guard is not None and len(sol.t_events[-1]):
        raise BlowUpError("|v| exceeded the guard 10 d_p",
                          last_state=(sol.t[-1], sol.y[0, -1], sol.y[1, -1]))
    return sol


def _as_trajectory(params, sol, lambda_term):
    t, v, dv = sol.t, sol.y[0], sol.y[1]
    if t[-1] < t[0]:
        t, v, dv = t[::-1], v[::-1], dv[::-1]
    return Trajectory(params, t.copy(), v.copy(), dv.copy(), float(lambda_term),
                      ((float(t[0]), float(t[-1]), sol.sol),))


def integrate(params: ExponentParams, v0: float, dv0: float, t0: float, t1: float,
              lambda_term: float = 0.0, rtol: float = RTOL, atol: float = ATOL,
              events=None, return_solution=False):
    """Integrate the Emden-Fowler ODE (with optional λe^{-2t}v term) from t0 to t1."""
    vals = np.array([v0, dv0, t0, t1, lambda_term], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise DomainError("non-finite input to integrate")
    guard = 10.0 * params.d_p
    if abs(v0) > guard:
        raise DomainError(f"|v0| = {abs(v0)} exceeds the guard 10 d_p = {guard}")
    a, b, p = params.a_p, params.b_p, params.p
    lam = float(lambda_term)

    if lam:
        def fun(t, y):
            return [y[1], a * y[1] + b * y[0] - abs(y[0]) ** (p - 1) * y[0] - lam * np.exp(-2 * t) * y[0]]
    else:
        def fun(t, y):
            return [y[1], a * y[1] + b * y[0] - abs(y[0]) ** (p - 1) * y[0]]

    if t0 == t1:
        raise DomainError("empty integration interval")
    sol = _solve(fun, [v0, dv0], t0, t1, rtol, atol, events=events, guard=guard)
    traj = _as_trajectory(params, sol, lam)
    return (traj, sol) if return_solution else traj


# ---------------------------------------------------------------------------
# heteroclinic

@dataclass(frozen=True)
class CriticalSequence:
    """Times and values of the extrema of v_p, indexed from the decaying end."""

    t_max: np.ndarray
    t_min: np.ndarray
    eta: np.ndarray
    epsv: np.ndarray

    def check_invariants(self) -> bool:
        n = min(len(self.t_max), len(self.t_min))
        inter = all(self.t_max[i] > self.t_min[i] for i in range(n))
        inter &= all(self.t_min[i] > self.t_max[i + 1] for i in range(min(n, len(self.t_max) - 1)))
        mono = bool(np.all(np.diff(self.epsv) > 0) and np.all(np.diff(self.eta) < 0))
        return bool(inter and mono)


@dataclass(frozen=True)
class HeteroclinicProfile:
    trajectory: Trajectory
    critical: CriticalSequence
    normalization_residual: float
    seed_time: float

    @property
    def params(self):
        return self.trajectory.params


def _dv_event(t, y):
    return y[1]


def seed_correction(params: ExponentParams) -> float:
    """Coefficient c of the second term in v ≈ e^{γ_-t}(1 + c e^{(p-1)γ_-t})."""
    gm, gp, p = params.gamma_minus, params.gamma_plus, params.p
    return -1.0 / ((p * gm - gp) * (p * gm - gm))


def shoot_heteroclinic(params: ExponentParams, bump_count: int, seed_level: float = 1e-10,
                       extra_time: float = 0.0) -> HeteroclinicProfile:
    """Shoot the heteroclinic backward from its decaying end.

    Integration stops at the maximum following the ``bump_count``-th minimum
    (or ``extra_time`` further back when positive).
    """
    if not params.eps > 0:
        raise DomainError("heteroclinic shooting needs eps > 0")
    if not params.spiral_ok:
        raise ConditionError("spiral condition fails")
    if bump_count < 1:
        raise DomainError("bump_count must be >= 1")
    gm, p = params.gamma_minus, params.p
    ts = np.log(seed_level) / gm
    c = seed_correction(params)
    e = np.exp(gm * ts)
    v0 = e * (1.0 + c * e ** (p - 1.0))
    dv0 = gm * e + c * p * gm * e**p
    # each half bump costs about log(1/eps)/(N-2) in time
    span = ts + (2 * bump_count + 2) * 2.0 * np.log(1.0 / params.eps) / (params.N - 2) + 40.0
    ev = _dv_event
    ev.terminal = 0
    traj, sol = integrate(params, v0, dv0, ts, ts - span, rtol=RTOL, atol=ATOL * v0,
                          events=[ev], return_solution=True)
    te = sol.t_events[0]
    if len(te) < 2 * bump_count:
        raise ShootingHorizonError(f"only {len(te)} extrema within the horizon",
                                   last_state=(sol.t[-1], sol.y[0, -1], sol.y[1, -1]))
    stop = te[2 * bump_count] if len(te) > 2 * bump_count else te[-1]
    stop = stop - max(extra_time, 0.5)
    # trim: re-integrate only up to the stopping time for a compact profile
    traj, sol = integrate(params, v0, dv0, ts, max(stop, ts - span), rtol=RTOL, atol=ATOL * v0,
                          return_solution=True)
    norm_res = abs(np.exp(-gm * ts) * v0 - 1.0)
    prof = HeteroclinicProfile(traj, CriticalSequence(np.array([]), np.array([]), np.array([]), np.array([])),
                               float(norm_res), float(ts))
    crit = _critical_points(prof, bump_count)
    return HeteroclinicProfile(traj, crit, float(norm_res), float(ts))


def _refine_zero(traj: Trajectory, a: float, b: float) -> float:
    f = lambda s: float(traj(s)[1][0])
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise BracketError("no sign change of dv in bracket")
    return brentq(f, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)


def _critical_points(profile: HeteroclinicProfile, count: int) -> CriticalSequence:
    traj = profile.trajectory
    params = traj.params
    t, dv = traj.t, traj.dv
    # sign changes of dv on the sample grid, scanned from the decaying end
    idx = np.nonzero(np.sign(dv[1:]) != np.sign(dv[:-1]))[0][::-1]
    t_max, t_min, eta, epsv = [], [], [], []
    for k in idx:
        tz = _refine_zero(traj, t[k], t[k + 1])
        vz = float(traj(tz)[0][0])
        if params.b_p * vz - vz**params.p < 0:  # v'' < 0: maximum
            if len(t_max) <= len(t_min):
                t_max.append(tz)
                eta.append(vz)
        else:
            if len(t_min) < len(t_max):
                t_min.append(tz)
                epsv.append(vz)
        if len(t_min) >= count and len(t_max) > count:
            break
    if len(t_min) < count:
        raise CountError(f"profile has {len(t_min)} minima, {count} requested")
    return CriticalSequence(np.array(t_max), np.array(t_min), np.array(eta), np.array(epsv))


def extract_critical_sequence(profile: HeteroclinicProfile, count: int) -> CriticalSequence:
    """Maxima t̄_i and minima t̲_i of v_p, i = 1..count, located by root finding on dv."""
    crit = profile.critical
    if len(crit.t_min) < count:
        crit = _critical_points(profile, count)
    return CriticalSequence(crit.t_max[:count + 1], crit.t_min[:count],
                            crit.eta[:count + 1], crit.epsv[:count])


def backward_limit(params: ExponentParams, rel_tol: float = 0.01, max_time: float = 2e4) -> float:
    """Integrate v_p far backward until its oscillation about c_p is below rel_tol·c_p.

    Returns the last extremal value.
    """
    prof = shoot_heteroclinic(params, 1)
    t0 = prof.trajectory.t[0]
    v0, dv0 = prof.trajectory(t0)
    ev = _dv_event
    chunk = 200.0
    t, v, dv = t0, float(v0[0]), float(dv0[0])
    last = v
    while t0 - t < max_time:
        _, sol = integrate(params, v, dv, t, t - chunk, events=[ev], return_solution=True)
        ext = sol.y_events[0]
        if len(ext):
            last = float(ext[-1][0])
            if np.all(np.abs(ext[-4:, 0] - params.c_p) <= rel_tol * params.c_p):
                return last
        t, v, dv = sol.t[-1], sol.y[0, -1], sol.y[1, -1]
    raise ShootingHorizonError("backward limit not reached", last_state=(t, v, dv))


# ---------------------------------------------------------------------------
# first return and its integrals

@dataclass(frozen=True)
class ReturnMapResult:
    eta: float
    t_bar: float
    t_under: float
    v_return: float
    gap: float
    EN: float


def _orbit_from_min(params: ExponentParams, eta: float, t_back: float = 0.0, horizon: float | None = None):
    """Solution through (eta, 0) at t=0: forward to the next minimum, backward t_back."""
    if horizon is None:
        horizon = 40.0 + 4.0 * np.log(1.0 / max(params.eps, 1e-300))

    def cross(t, y):
        return y[0]
    cross.terminal = True
    cross.direction = -1

    def ext(t, y):
        return y[1]
    ext.terminal = 3  # the start point registers, then a maximum and the returning minimum

    atol = ATOL * max(eta, 1e-300)
    fwd, sol = integrate(params, eta, 0.0, 0.0, horizon, atol=atol, events=[ext, cross],
                         return_solution=True)
    if len(sol.t_events[1]):
        raise DomainError(f"orbit from eta={eta} crosses v=0 before returning")
    te = sol.t_events[0]
    te = te[te > 1e-9]
    if len(te) < 2:
        raise DomainError(f"no first return for eta={eta} within horizon {horizon}")
    traj = fwd
    if t_back > 0:
        back = integrate(params, eta, 0.0, 0.0, -t_back, atol=atol)
        traj = back.join(fwd)
    return traj, float(te[0]), float(te[1])


def eta_bar(N: int, eta: float) -> float:
    """Conjugate amplitude with equal critical-case energy, lying in (c, d)."""
    par = derive_params(N, 0.0)
    H = lambda x: float(hamiltonian(par, x, 0.0))
    h0 = H(eta)
    f = lambda x: H(x) - h0
    lo, hi = par.c_p, par.d_p * (1 + 1e-12) + 1e-12
    if not f(lo) < 0 < f(hi) + 1e-300 and not (eta == 0):
        raise BracketError("no conjugate amplitude in (c, d)")
    if eta == 0:
        return par.d_p
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)


def energy_integral(N: int, eta: float, nodes: int = 200) -> float:
    """E_N(η) = ∫_η^{η̄} sqrt(2(H(η,0) - H(x,0))) dx for the critical exponent."""
    par = derive_params(N, 0.0)
    if not 0 <= eta < par.c_p:
        raise DomainError("eta must lie in [0, c)")
    eb = eta_bar(N, eta)
    h0 = float(hamiltonian(par, eta, 0.0))
    # x = η + (η̄-η)(1-cos θ)/2 removes the square-root endpoint behaviour
    th, w = np.polynomial.legendre.leggauss(nodes)
    th = 0.5 * np.pi * (th + 1.0)
    w = 0.5 * np.pi * w
    x = eta + 0.5 * (eb - eta) * (1.0 - np.cos(th))
    jac = 0.5 * (eb - eta) * np.sin(th)
    g = np.sqrt(np.maximum(2.0 * (h0 - hamiltonian(par, x, 0.0)), 0.0))
    return float(np.sum(w * g * jac))


def first_return(params: ExponentParams, eta: float) -> ReturnMapResult:
    """Follow the orbit from the minimum (eta, 0) to the next minimum."""
    if not params.spiral_ok:
        raise ConditionError("spiral condition fails")
    if not 0 < eta < params.c_p:
        raise DomainError(f"eta must lie in (0, c_p) = (0, {params.c_p})")
    traj, tb, tu = _orbit_from_min(params, eta)
    vr = float(traj(tu)[0][0])
    gap = eta**2 - vr**2
    return ReturnMapResult(float(eta), tb, tu, vr, float(gap), energy_integral(params.N, eta))


@dataclass(frozen=True)
class LambdaResponse:
    eta: float
    beta: float
    t_bar: float
    t_under: float
    w_t: np.ndarray
    w_window: np.ndarray
    fit_error: float


def lambda_response(params: ExponentParams, eta: float, d0: float, c0: float = 10.0) -> LambdaResponse:
    """Response w of the orbit through (eta,0) to the perturbation e^{-2t}v.

    Solves w'' - a w' - b w + p v^{p-1} w = e^{-2t} v backward from
    (w, w') = (0, 0) at the return time, using the frozen interpolant of v.
    """
    se = np.sqrt(params.eps)
    if not (se / c0 < eta < c0 * se):
        raise DomainError(f"eta={eta} outside the window ({se / c0}, {c0 * se})")
    if not 0 < d0 <= 5:
        raise DomainError("d0 must lie in (0, 5]")
    traj, tb, tu = _orbit_from_min(params, eta, t_back=d0 + 0.5)
    a, b, p = params.a_p, params.b_p, params.p

    def fun(t, y):
        vt = traj(t)[0][0]
        return [y[1], a * y[1] + b * y[0] - p * abs(vt) ** (p - 1) * y[0] + np.exp(-2 * t) * vt]

    sol = solve_ivp(fun, (tu, -d0), [0.0, 0.0], method="DOP853", rtol=1e-11, atol=1e-16, dense_output=True)
    if sol.status == -1:
        raise BlowUpError(sol.message)
    beta = _quad_traj(lambda t: traj(t)[0] ** 2 * np.exp(-2 * t), 0.0, tu)
    ts = np.linspace(-d0, d0, 201)
    w = sol.sol(ts)[0]
    N = params.N
    law = 4.0 * beta / (eta * (N - 2) ** 2) * np.exp(-(N - 2) * ts / 2)
    fit = float(np.max(np.abs(w - law)) / (beta * params.eps ** (-0.5 + 2.0 / (N + 2))))
    return LambdaResponse(float(eta), float(beta), tb, tu, ts, w, fit)


def _quad_traj(f, a, b, panel=0.25):
    """Composite Gauss-Legendre on [a, b] for smooth integrands of the trajectory."""
    if a == b:
        return 0.0
    n = max(4, int(np.ceil(abs(b - a) / panel)))
    edges = np.linspace(a, b, n + 1)
    x, w = np.polynomial.legendre.leggauss(16)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = np.asarray(f(pts)).reshape(n, -1)
    return float(np.sum(half * (vals @ w)))


def beta_ell(profile: HeteroclinicProfile, ell: int) -> float:
    """∫ v² e^{-2(t - t̲_ℓ)} between the ℓ-th and (ℓ-1)-th minimum (t̲_0 = +∞)."""
    crit = profile.critical
    if ell < 1 or len(crit.t_min) < ell:
        raise CountError(f"profile has {len(crit.t_min)} minima, ell={ell} requested")
    lo = crit.t_min[ell - 1]
    traj = profile.trajectory
    hi = crit.t_min[ell - 2] if ell >= 2 else traj.t[-1]
    val = _quad_traj(lambda t: traj(t)[0] ** 2 * np.exp(-2 * (t - lo)), lo, hi)
    if ell == 1:
        # analytic tail of e^{2γ_- t} e^{-2(t - t̲)} beyond the seed
        gm = traj.params.gamma_minus
        rate = 2 - 2 * gm
        val += float(traj(hi)[0][0] ** 2 * np.exp(-2 * (hi - lo)) / rate)
    return val


def linear_comparison(params: ExponentParams, eta: float, horizon: float) -> float:
    """sup_{|t|<=horizon} |v_{p,η} - η w_p| / (η^p w_p^p)."""
    if eta == 0:
        return 0.0
    if not 0 < eta < params.c_p / 2:
        raise DomainError("eta must lie in (0, c_p/2)")
    atol = ATOL * eta
    fwd = integrate(params, eta, 0.0, 0.0, horizon, atol=atol)
    back = integrate(params, eta, 0.0, 0.0, -horizon, atol=atol)
    traj = back.join(fwd)
    ts = np.linspace(-horizon, horizon, 4001)
    v = traj(ts)[0]
    wp = profile_wp(params, ts)
    return float(np.max(np.abs(v - eta * wp) / (eta * wp) ** params.p))


def neighbor_gap(params: ExponentParams, eta: float, eta2: float, c0: float = 10.0,
                 c4: float | None = None) -> tuple[float, float]:
    """Lipschitz quotients of the return value and return time between two amplitudes."""
    from .constants import constant

    if c4 is None:
        c4 = constant("C4", params.N)
    se = np.sqrt(params.eps)
    lo, hi = (1.0 / c0 + np.sqrt(c4)) * se, (c0 + np.sqrt(c4)) * se
    if eta2 == eta:
        raise DomainError("eta2 == eta: quotient undefined")
    if not (lo < eta < eta2 < hi):
        raise DomainError(f"need {lo} < eta < eta2 < {hi}")
    r1 = first_return(params, eta)
    r2 = first_return(params, eta2)
    d = eta2 - eta
    return abs(r1.v_return - r2.v_return) / d, abs(r1.t_under - r2.t_under) * eta / d


def bump_shape_check(profile: HeteroclinicProfile, bump_index: int, window: float = 3.0) -> float:
    """sup_{|t|<=window} |v(t̄_i + t) - w0(t)| / eps (raw sup when eps = 0)."""
    crit = profile.critical
    if bump_index < 1 or bump_index > len(crit.t_max):
        raise CountError(f"bump {bump_index} not in extracted sequence")
    params = profile.params
    tb = crit.t_max[bump_index - 1]
    s = np.linspace(-window, window, 1201)
    v = profile.trajectory(tb + s)[0]
    dev = float(np.max(np.abs(v - profile_w0(params.N, s))))
    return dev / params.eps if params.eps > 0 else dev


def critical_case_profile(N: int, half_width: float = 10.0) -> HeteroclinicProfile:
    """The homoclinic w0 of the critical exponent, packaged as a profile."""
    par = derive_params(N, 0.0)
    amp = float(profile_w0(N, 0.0))
    fwd = integrate(par, amp, 0.0, 0.0, half_width)
    back = integrate(par, amp, 0.0, 0.0, -half_width)
    crit = CriticalSequence(np.array([0.0]), np.array([]), np.array([amp]), np.array([]))
    return HeteroclinicProfile(back.join(fwd), crit, 0.0, half_width)


def en_zero(N: int) -> float:
    """E_N(0) from the closed-form sech moment, for cross-checks."""
    amp2 = (N * (N - 2) / 4.0) ** ((N - 2) / 2.0)
    return amp2 * (N - 2) ** 2 / (8.0 * (N - 1.0)) * sech_moment(N - 2.0)
