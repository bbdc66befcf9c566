"""Build the closed-form equilibria, check them, and compare with the LP optima.

Run with ``python3 demos/equilibria_walkthrough.py``.
"""

import math

from bertrand_eq.constructions import cce_symmetric, cce_total_utility_bound, ce_bound, phi_ce_symmetric
from bertrand_eq.equilibrium import ALL_MAPS, CONSTANT, expected_utility, verify
from bertrand_eq.game import GameSpec, monopoly_value
from bertrand_eq.lp import lp_best_ce_duopoly, lp_best_symmetric_cce


def main():
    game = GameSpec.create(100, 2, 0.0)
    s_max = monopoly_value(game, 0)
    print(f"k=100, zero cost, constant demand: monopoly value {s_max:.3f}")

    mu = cce_symmetric(game)
    rep = verify(game, mu, "cce", tol=1e-10)
    print(f"diagonal CCE: {len(mu.weights)} support points, per-player utility "
          f"{expected_utility(game, mu, 0):.4f} (floor s_max/(4e^2) = {s_max / (4 * math.e ** 2):.4f}), "
          f"CCE check {'passes' if rep.passed else 'fails'}")

    best, v = lp_best_symmetric_cce(game)
    print(f"best symmetric CCE from the LP: {v:.4f} per player, ratio {v / s_max:.4f} (1/e = {1 / math.e:.4f})")

    for n in (2, 4, 6, 8):
        g = GameSpec.create(100, n, 0.0)
        _, vn = lp_best_symmetric_cce(g)
        print(f"  n={n}: per-player ratio {vn / s_max:.4f}, total {n * vn:.4f} <= bound {cce_total_utility_bound(g):.4f}")

    small = GameSpec.create(20, 2, 0.0)
    _, v_ce = lp_best_ce_duopoly(small, "player1")
    lo, hi = ce_bound(small)
    print(f"k=20: best CE utility for player 1 is {v_ce:.4f}, inside [{lo:.4f}, {hi:.4f}]")

    big = GameSpec.create(6000, 2, 0.0)
    phi = phi_ce_symmetric(big, math.exp(8))
    rep = verify(big, phi, [ALL_MAPS, CONSTANT], tol=1e-10)
    print(f"k=6000 harmonic distribution: utilities {[round(u, 4) for u in rep.expected_utilities]}, "
          f"swap player / constant player check {'passes' if rep.passed else 'fails'}")


if __name__ == "__main__":
    main()
