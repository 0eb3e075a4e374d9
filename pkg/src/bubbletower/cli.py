"""Command-line runner: configuration, dispatch, structured output and sweeps.

    bubbletower constants --dimension 6
    bubbletower radial --dimension 6 --epsilon 1e-3 --ell 2 --oracle
    bubbletower reduce --dimension 6 --mu 30 --ell 1 --output crit.json
    bubbletower tower --from-critical crit.json --epsilon 1e-4
    bubbletower sweep --target radial --dimension 6 --epsilon 1e-2,1e-3,1e-4 --jobs 3

Exit codes: 0 ok, 1 computation error, 2 usage error, 3 IO error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import BubbleTowerError

COMMANDS = ("constants", "heteroclinic", "return-map", "reduce", "radial", "tower", "sweep")
EXIT_OK, EXIT_COMPUTE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class RunConfig:
    command: str
    dimension: int | None = None
    epsilon: float | tuple | None = None
    mu: float = 0.0
    ell: tuple = (1,)
    xi: float = 0.0
    geometry: str = "ball"
    output_path: str | None = None
    format: str = "json"
    eta: float | None = None
    oracle: bool = False
    from_critical: str | None = None
    target: str = "radial"
    jobs: int = 1
    timing: bool = False


def _float_list(text):
    try:
        vals = tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"expected a real or comma list, got {text!r}") from exc
    if not vals:
        raise UsageError("empty list")
    return vals


def _int_list(text):
    try:
        return tuple(int(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"expected an integer or comma list, got {text!r}") from exc


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _typed(conv):
    def f(text):
        try:
            return conv(text)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value {text!r}") from exc
    return f


# key -> converter; the config file accepts exactly these keys
SCHEMA = {
    "dimension": _typed(int),
    "epsilon": _float_list,
    "mu": _typed(float),
    "ell": _int_list,
    "xi": _typed(float),
    "geometry": str,
    "output_path": str,
    "format": str,
    "eta": _typed(float),
    "oracle": _bool,
    "from_critical": str,
    "target": str,
    "jobs": _typed(int),
    "timing": _bool,
}

REQUIRED = {
    "constants": ("dimension",),
    "heteroclinic": ("dimension", "epsilon"),
    "return-map": ("dimension", "epsilon"),
    "reduce": ("dimension",),
    "radial": ("dimension", "epsilon"),
    "tower": ("from_critical", "epsilon"),
    "sweep": ("dimension", "epsilon"),
}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; unknown keys are rejected."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for n, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SCHEMA:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = SCHEMA[key](val)
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bubbletower", description="Bubble-tower experiments.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="flat key = value file")
        sp.add_argument("--dimension", "-N", default=argparse.SUPPRESS)
        sp.add_argument("--epsilon", default=argparse.SUPPRESS)
        sp.add_argument("--mu", default=argparse.SUPPRESS)
        sp.add_argument("--ell", default=argparse.SUPPRESS)
        sp.add_argument("--xi", default=argparse.SUPPRESS)
        sp.add_argument("--geometry", default=argparse.SUPPRESS)
        sp.add_argument("--output", dest="output_path", default=argparse.SUPPRESS)
        sp.add_argument("--format", default=argparse.SUPPRESS)
        sp.add_argument("--eta", default=argparse.SUPPRESS)
        sp.add_argument("--oracle", action="store_const", const="true", default=argparse.SUPPRESS)
        sp.add_argument("--from-critical", dest="from_critical", default=argparse.SUPPRESS)
        sp.add_argument("--target", default=argparse.SUPPRESS)
        sp.add_argument("--jobs", default=argparse.SUPPRESS)
        sp.add_argument("--timing", action="store_const", const="true", default=argparse.SUPPRESS)
    return ap


def _validate(cfg: RunConfig) -> RunConfig:
    for key in REQUIRED[cfg.command]:
        if getattr(cfg, key) is None:
            raise UsageError(f"{cfg.command}: missing required --{key.replace('_', '-')}")
    if cfg.dimension is not None and (cfg.dimension < 5):
        raise UsageError("dimension must be >= 5")
    if cfg.geometry not in ("ball", "exterior"):
        raise UsageError("geometry must be ball or exterior")
    if cfg.format not in ("json", "csv"):
        raise UsageError("format must be json or csv")
    if any(e < 1 for e in cfg.ell) or not cfg.ell:
        raise UsageError("ell entries must be positive")
    if cfg.epsilon is not None:
        if any(not e > 0 for e in cfg.epsilon):
            raise UsageError("epsilon must be positive")
        if cfg.command != "sweep" and len(cfg.epsilon) != 1:
            raise UsageError("a list of epsilon values is only accepted by sweep")
    if cfg.command == "sweep" and cfg.target not in COMMANDS[:-1]:
        raise UsageError(f"sweep target must be one of {COMMANDS[:-1]}")
    if cfg.jobs < 1:
        raise UsageError("jobs must be >= 1")
    return cfg


def parse_config(argv, file: str | None = None) -> RunConfig:
    """Flags override file values, which override defaults."""
    ns = vars(_parser().parse_args(list(argv)))
    command = ns.pop("command")
    path = ns.pop("config", None) or file
    values = read_config_file(path) if path else {}
    for key, raw in ns.items():
        values[key] = SCHEMA[key](raw)
    return _validate(RunConfig(command=command, **values))


# ---------------------------------------------------------------------------
# reports

@dataclass
class RunReport:
    config: dict
    values: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    status: str = "ok"
    message: str = ""
    wall_time: float | None = None
    table: tuple | None = None     # (header, rows) for CSV output

    def to_dict(self, timing: bool = False) -> dict:
        out = {"config": self.config, "values": self.values, "diagnostics": self.diagnostics,
               "status": self.status, "message": self.message}
        if timing and self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out


def _clean(x):
    """JSON-ready copy with floats rounded to 15 significant digits."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.15g}")
    return x


def to_json(report: RunReport, timing: bool = False) -> str:
    return json.dumps(_clean(report.to_dict(timing)), sort_keys=True, indent=2) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{float(v):.15g}" if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def emit(report: RunReport, fmt: str = "json", path: str | None = None, timing: bool = False,
         stream=None) -> None:
    """Write the report.  CSV writes the table to ``path`` and the JSON report beside it."""
    stream = sys.stdout if stream is None else stream
    text = to_json(report, timing)
    if fmt == "csv":
        header, rows = report.table if report.table else (["key", "value"], _flat_items(report.values))
        table = to_csv(header, rows)
        if path is None:
            stream.write(table)
            return
        _write(path, table)
        _write(_json_sibling(path), text)
        return
    if path is None:
        stream.write(text)
    else:
        _write(path, text)


def _json_sibling(path: str) -> str:
    return (path[:-4] if path.endswith(".csv") else path) + ".json"


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _flat_items(values, prefix=""):
    rows = []
    for k, v in values.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flat_items(v, key + "."))
        elif isinstance(v, (list, tuple, np.ndarray)) and all(np.isscalar(e) for e in np.ravel(v)):
            rows.extend((f"{key}[{i}]", e) for i, e in enumerate(np.ravel(v)))
        else:
            rows.append((key, v))
    return rows


# ---------------------------------------------------------------------------
# commands

def _eps(cfg):
    return cfg.epsilon[0]


def _run_constants(cfg, rep):
    from .constants import all_constants

    closed = all_constants(cfg.dimension, "closed")
    quad = all_constants(cfg.dimension, "quadrature")
    rep.values = {"closed": closed, "quadrature": quad,
                  "max_route_difference": max(abs(closed[k] - quad[k]) / abs(closed[k]) for k in closed)}
    rep.table = (["name", "closed", "quadrature"], [(k, closed[k], quad[k]) for k in closed])


def _run_heteroclinic(cfg, rep):
    from .params import derive_params
    from .phase_plane import shoot_heteroclinic

    params = derive_params(cfg.dimension, _eps(cfg))
    prof = shoot_heteroclinic(params, max(cfg.ell))
    c = prof.critical
    rep.values = {"t_max": c.t_max, "t_min": c.t_min, "eta": c.eta, "epsv": c.epsv,
                  "normalization_residual": prof.normalization_residual, "seed_time": prof.seed_time,
                  "c_p": params.c_p, "d_p": params.d_p}
    rep.diagnostics = {"interlacing": str(c.check_invariants())}
    tr = prof.trajectory
    rep.table = (["t", "v", "dv"], list(zip(tr.t, tr.v, tr.dv)))


def _run_return_map(cfg, rep):
    from .params import derive_params
    from .phase_plane import first_return, shoot_heteroclinic

    params = derive_params(cfg.dimension, _eps(cfg))
    if cfg.eta is not None:
        etas = [cfg.eta]
        expected = [None]
    else:
        c = shoot_heteroclinic(params, max(cfg.ell) + 1).critical
        etas = list(c.epsv[1:])
        expected = list(c.epsv[:-1])
    rows = []
    for eta, exp in zip(etas, expected):
        r = first_return(params, eta)
        row = {"eta": r.eta, "t_bar": r.t_bar, "t_under": r.t_under, "v_return": r.v_return,
               "gap": r.gap, "EN": r.EN}
        if exp is not None:
            row["heteroclinic_next_minimum"] = exp
        rows.append(row)
    rep.values = {"returns": rows}
    rep.table = (["eta", "v_return", "gap", "EN"], [(r["eta"], r["v_return"], r["gap"], r["EN"]) for r in rows])


def _critical_dict(cp):
    c = cp.config
    return {"geometry": c.geometry.value, "Lambda": c.Lambda, "x": c.x, "ells": c.ells, "mu": c.mu,
            "grad_norm": cp.grad_norm, "hessian_spectrum": cp.hessian_spectrum,
            "nondegenerate": cp.nondegenerate, "reduced": cp.reduced}


def _run_reduce(cfg, rep):
    from .reduced_energy import scenario_ball, scenario_exterior_pair

    if cfg.geometry == "ball":
        cps = scenario_ball(cfg.dimension, cfg.ell[0], cfg.mu)
    else:
        if cfg.mu != 0:
            raise BubbleTowerError("the exterior pair scenario is defined for mu = 0")
        cps = [scenario_exterior_pair(cfg.dimension, cfg.ell[0])]
    rep.values = {"count": len(cps), "critical_points": [_critical_dict(c) for c in cps]}
    rep.table = (["index", "Lambda", "grad_norm", "nondegenerate"],
                 [(i, float(c.config.Lambda[0]), c.grad_norm, str(c.nondegenerate)) for i, c in enumerate(cps)])


def _run_radial(cfg, rep):
    from .radial import (MatchConfig, assemble_u, count_bumps, expansion_check, match_all, pde_residual,
                         shooting_oracle, sup_relative_difference)
    from .tower import fit_bubble_scales

    ell = cfg.ell[0]
    mc = MatchConfig(cfg.dimension, _eps(cfg), cfg.mu, ell, cfg.xi)
    sol = match_all(mc)
    prof = assemble_u(sol, mc)
    vals = {"grid": sol.grid, "alphas": sol.alphas, "shifts": sol.shifts, "mismatch": sol.mismatch,
            "bump_count": count_bumps(prof), "pde_residual": pde_residual(prof), "lambda": mc.lam,
            "r_eps": mc.r_eps, "d": fit_bubble_scales(prof, mc.N, mc.eps, ell)}
    try:
        fit = expansion_check(prof, mc)
        vals["expansion"] = {"c0": fit.c0, "c1": fit.c1, "residual": fit.residual,
                             "predicted_c0": fit.predicted_c0, "predicted_c1": fit.predicted_c1,
                             "mu_term": fit.mu_term}
    except BubbleTowerError as exc:
        rep.diagnostics["expansion"] = str(exc)
        rep.status = "warning"
    if cfg.oracle:
        orc = shooting_oracle(mc.N, mc.params.p, mc.lam, ell)
        vals["oracle"] = {"amplitude": orc.meta["amplitude"], "boundary_map": orc.meta["boundary_map"],
                          "sup_relative_difference": sup_relative_difference(prof, orc, mc.r_eps)}
    if sol.warnings:
        rep.status = "warning"
        rep.diagnostics["matcher"] = "; ".join(sol.warnings)
    rep.values = vals
    rep.table = (["r", "u"], list(zip(prof.r_samples, prof.u)))


def load_critical(path: str) -> dict:
    """First critical point of a ``reduce`` report, or a bare critical-point object."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not JSON ({exc})") from exc
    if "values" in data:
        data = data["values"]
    if "critical_points" in data:
        if not data["critical_points"]:
            raise BubbleTowerError(f"{path} contains no critical points")
        data = data["critical_points"][0]
    for key in ("Lambda", "x", "ells"):
        if key not in data:
            raise UsageError(f"{path}: critical point lacks {key!r}")
    return data


def _run_tower(cfg, rep):
    from .tower import residual_and_energy, synthesize, tower_from_critical

    cp = load_critical(cfg.from_critical)
    x = np.atleast_2d(np.asarray(cp["x"], dtype=float))
    N = x.shape[1]
    spec = tower_from_critical(x, cp["Lambda"], cp["ells"], N, _eps(cfg), float(cp.get("mu", cfg.mu)),
                               cp.get("geometry", cfg.geometry))
    prof = synthesize(spec)
    res, masses = residual_and_energy(prof, spec.p)
    rep.values = {"N": N, "Lambda": spec.Lambda, "xi": spec.xi, "d": [list(r) for r in spec.d],
                  "scales": [spec.scales(i) for i in range(spec.m)], "residual_norm": res, "masses": masses,
                  "limit_defect": spec.limit_defect(), "stitch": {str(k): v for k, v in prof.stitch.items()},
                  "lambda": spec.lam}
    if not all(v["ok"] for v in prof.stitch.values()):
        rep.status = "warning"
        rep.diagnostics["stitch"] = "near/far mismatch above 15% on the matching annulus"
    rep.diagnostics["centers"] = "bubbles pinned at the reduced critical points"
    rep.table = (["point", "r", "u"], [(i, r, u) for i, (g, uu) in enumerate(zip(prof.grids, prof.u))
                                       for r, u in zip(g, uu)])


def _sweep_one(cfg_dict):
    cfg = RunConfig(**cfg_dict)
    return execute(cfg).to_dict(timing=False)


def _run_sweep(cfg, rep):
    runs = [asdict(replace(cfg, command=cfg.target, epsilon=(e,), output_path=None, jobs=1))
            for e in cfg.epsilon]
    if cfg.jobs == 1:
        out = [_sweep_one(r) for r in runs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            out = list(pool.map(_sweep_one, runs))        # map preserves input order
    rep.values = {"runs": out}
    if any(r["status"] == "error" for r in out):
        rep.status = "error"
        rep.message = "at least one sweep point failed"
    elif any(r["status"] == "warning" for r in out):
        rep.status = "warning"


DISPATCH = {
    "constants": _run_constants,
    "heteroclinic": _run_heteroclinic,
    "return-map": _run_return_map,
    "reduce": _run_reduce,
    "radial": _run_radial,
    "tower": _run_tower,
    "sweep": _run_sweep,
}


def execute(config: RunConfig) -> RunReport:
    """Run one command; module errors become status = error."""
    rep = RunReport(config=asdict(config))
    t0 = time.perf_counter()
    try:
        DISPATCH[config.command](config, rep)
    except BubbleTowerError as exc:
        rep.status, rep.message = "error", f"{type(exc).__name__}: {exc}"
        rep.table = None
    rep.wall_time = time.perf_counter() - t0
    return rep


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rep = execute(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        emit(rep, cfg.format, cfg.output_path, cfg.timing)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    if rep.status == "error":
        print(rep.message, file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
