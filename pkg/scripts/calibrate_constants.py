"""Measure the existence-only constants once and store them in calibrated.json.

Run from the repository root:

    python3 scripts/calibrate_constants.py

Tests assert stability against the stored values (within a recorded factor),
so rerun this only when an integrator setting changes on purpose.
"""

import json
from pathlib import Path

import numpy as np

from bubbletower.constants import constant
from bubbletower.params import derive_params
from bubbletower.phase_plane import (bump_shape_check, lambda_response, linear_comparison, neighbor_gap,
                                     shoot_heteroclinic)
from bubbletower.reduced_energy import fold_threshold

OUT = Path(__file__).resolve().parents[1] / "src" / "bubbletower" / "calibrated.json"
N = 6


def offsets(eps, count=3):
    crit = shoot_heteroclinic(derive_params(N, eps), count).critical
    return [float(crit.t_min[i - 1] - (2 * i - 1) / (N - 2) * np.log(eps)) for i in range(1, count + 1)]


def main():
    out = {"N": N}

    off = offsets(1e-3)
    out["spacing_offsets_eps1e-3"] = off
    out["spacing_offset_bound"] = max(abs(x) for x in off)

    p4 = derive_params(N, 1e-4)
    out["bump_shape_eps1e-4_i1"] = bump_shape_check(shoot_heteroclinic(p4, 3), 1)

    eta = 9.5 * np.sqrt(1e-4)
    lr = lambda_response(p4, eta, 1.0)
    out["lambda_response_eta"] = float(eta)
    out["lambda_response_fit_error"] = lr.fit_error
    out["lambda_response_beta_ratio"] = float(np.exp(2 * lr.t_bar) * lr.beta / constant("C5", N))

    p3 = derive_params(N, 1e-3)
    out["linear_comparison_eps1e-3_eta0.1_h5"] = linear_comparison(p3, 0.1, 5.0)

    se = np.sqrt(1e-4)
    e1 = (1.0 + np.sqrt(constant("C4", N))) * se
    g = neighbor_gap(p4, e1, e1 + 0.01 * se)
    out["neighbor_gap_eta"] = float(e1)
    out["neighbor_gap"] = [float(g[0]), float(g[1])]

    out["fold_threshold_N6_ell1"] = fold_threshold(N, 1)

    OUT.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
