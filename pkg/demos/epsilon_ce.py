"""An eps-correlated equilibrium of DIR(K, c) with no mass on (K, K).

    python3 demos/epsilon_ce.py [K] [c] [eps]
"""
import sys

from domlab.equilibrium import construct_dir_epsilon_ce, epsilon_ce_gap, welfare
from domlab.games import gen_dir

K = int(sys.argv[1]) if len(sys.argv) > 1 else 10
c = float(sys.argv[2]) if len(sys.argv) > 2 else 10.0
eps = float(sys.argv[3]) if len(sys.argv) > 3 else 1e-9

game = gen_dir(K, c)
pi = construct_dir_epsilon_ce(K, c, eps)
for prof, p in zip(pi.profiles, pi.probs):
    print(f"  ({prof[0] + 1},{prof[1] + 1})  {p:.3e}")
print(f"gap {epsilon_ce_gap(game, pi):.3e} <= eps {eps:g}")
print(f"welfare {welfare(game, pi):.4f} vs equilibrium {2 * K / max(K, c):.4f}")
