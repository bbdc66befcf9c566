"""Short self-play runs showing where no-swap-regret learners settle.

Run with ``python3 demos/learning_dynamics.py [T]`` (default T = 200000).
"""

import sys

from bertrand_eq.experiments import modal_transaction_price, run_simulations
from bertrand_eq.game import GameSpec
from bertrand_eq.learners import eta_mode_configs


def main(T=200_000, seeds=(0, 1, 2)):
    for c2 in (0.5, 1.0):
        game = GameSpec.create(100, 2, [0.0, c2])
        for mode in ("eta_base", "eta_1_plus_10i", "eta_11_minus_10i"):
            cfg1, cfg2 = eta_mode_configs(mode)
            res = run_simulations(game, cfg1, cfg2, T, list(seeds))
            swap = max(r.regrets["player1"]["swap"] for r in res) / T
            print(f"c2={c2:.1f} {mode:17s} modal transaction price {modal_transaction_price(res):.2f}, "
                  f"player-1 swap regret per round {swap:.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 200_000)
