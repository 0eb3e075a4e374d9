"""Energy and residual of the synthesized two-bubble tower along an eps sweep (N = 6, ball)."""

from bubbletower.constants import bubble_dirichlet_energy, constant
from bubbletower.reduced_energy import scenario_ball
from bubbletower.tower import residual_and_energy, synthesize, tower_from_critical

N = 6


def main():
    cp = scenario_ball(N, 2, 30.0)[0]
    c3, dir_e = constant("C3", N), bubble_dirichlet_energy(N)
    print(f"Lambda = {cp.config.Lambda[0]:.6f}   C3 = {c3:.4f}   bubble Dirichlet energy = {dir_e:.4f}")
    print(f"{'eps':>8} {'residual':>9} {'mass':>11} {'mass/2C3':>9} {'mass/2E':>8} {'stitch':>7}")
    for eps in (1e-2, 1e-3, 1e-4, 1e-5):
        spec = tower_from_critical(cp.config.x, cp.config.Lambda, [2], N, eps)
        prof = synthesize(spec)
        res, masses = residual_and_energy(prof, spec.p)
        print(f"{eps:8.0e} {res:9.4f} {masses[0]:11.3f} {masses[0] / (2 * c3):9.4f} {masses[0] / (2 * dir_e):8.4f} "
              f"{prof.stitch[0]['relative_mismatch']:7.3f}")


if __name__ == "__main__":
    main()
