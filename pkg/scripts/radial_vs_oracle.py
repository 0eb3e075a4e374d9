"""Compare the matched radial tower with amplitude shooting and report the expansion fit."""

import argparse

from bubbletower.radial import (MatchConfig, assemble_u, count_bumps, expansion_check, match_all, pde_residual,
                                shooting_oracle, sup_relative_difference)
from bubbletower.tower import fit_bubble_scales


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dimension", type=int, default=6)
    ap.add_argument("--epsilon", type=float, nargs="+", default=[1e-3, 1e-4])
    ap.add_argument("--ell", type=int, nargs="+", default=[1, 2])
    args = ap.parse_args()
    N = args.dimension
    print(f"{'eps':>8} {'ell':>3} {'mismatch':>9} {'pde res':>9} {'oracle':>9} {'c0/pred':>8} {'c1/pred':>8}  d_j")
    for eps in args.epsilon:
        for ell in args.ell:
            cfg = MatchConfig(N, eps, 0.0, ell, 0.0)
            sol = match_all(cfg)
            prof = assemble_u(sol, cfg)
            orc = shooting_oracle(N, cfg.params.p, 0.0, ell)
            diff = sup_relative_difference(prof, orc, cfg.r_eps)
            fit = expansion_check(prof, cfg)
            d = fit_bubble_scales(prof, N, eps, ell)
            assert count_bumps(prof) == ell
            print(f"{eps:8.0e} {ell:3d} {sol.mismatch:9.1e} {pde_residual(prof):9.1e} {diff:9.1e} "
                  f"{fit.c0 / fit.predicted_c0:8.4f} {fit.c1 / fit.predicted_c1:8.4f}  "
                  + " ".join(f"{x:.5f}" for x in d))


if __name__ == "__main__":
    main()
