"""Print the eps-sweep tables behind the minimum-level, spacing and beta laws (N = 6)."""

import numpy as np

from bubbletower.constants import constant
from bubbletower.params import derive_params
from bubbletower.phase_plane import beta_ell, shoot_heteroclinic

N = 6
SWEEP = (1e-2, 1e-3, 1e-4, 1e-5)


def main():
    c4, c8 = constant("C4", N), constant("C8", N)
    print(f"C4 = {c4:.6f}   C8 = {c8:.6f}")
    print(f"{'eps':>8} {'i':>2} {'lvl^2/(i eps)':>14} {'t_min offset':>13}")
    for eps in SWEEP:
        prof = shoot_heteroclinic(derive_params(N, eps), 3)
        c = prof.critical
        for i in (1, 2, 3):
            off = c.t_min[i - 1] - (2 * i - 1) / (N - 2) * np.log(eps)
            print(f"{eps:8.0e} {i:2d} {c.epsv[i - 1] ** 2 / (i * eps):14.6f} {off:13.6f}")
        betas = [beta_ell(prof, ell) / np.sqrt(ell * eps) / c8 for ell in (1, 2)]
        print(f"{'':8} beta/C8 ell=1,2: {betas[0]:.5f} {betas[1]:.5f}")


if __name__ == "__main__":
    main()
