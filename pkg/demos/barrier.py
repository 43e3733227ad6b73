"""Exact-gradient dual averaging on DIR(K, 3K^2): mass on the equilibrium
actions stays low long after the elimination path is finished.

    python3 demos/barrier.py [T]
"""
import sys

import numpy as np

from domlab.games import gen_dir
from domlab.simulate import RunConfig, run_selfplay

T = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
for algo in ("ew", "lgd", "fp"):
    for K in (3, 4, 5):
        tr = run_selfplay(RunConfig(gen_dir(K, 3 * K * K), algo, T, feedback="exact"))
        s = np.array([d[0][-1] + d[1][-1] for d in tr.dists])
        tops = [int(np.argmax(p)) + 1 for p in tr.dists[-1]]
        print(f"{algo:3s} K={K}: max p_A,K + p_B,K = {s.max():.3f}, modal actions at T: {tops}")
