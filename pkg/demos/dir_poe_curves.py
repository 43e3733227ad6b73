"""PoE curves on DIR(10, 20) for Exp3-DH and the bandit baselines.

    python3 demos/dir_poe_curves.py [T] [seeds]

Writes traces and dir_poe_curves.svg into demo_out/. The full-size run uses
T = 1000000 and 5 seeds; the default is a quick 20000-round preview.
"""
import os
import sys

from domlab.games import gen_dir
from domlab.iesds import iesds
from domlab.plot import aggregate, svg_chart
from domlab.simulate import NoiseModel, RunConfig, run_batch

T = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
seeds = range(int(sys.argv[2]) if len(sys.argv) > 2 else 3)
algos = ["exp3dh:b=0.2,beta=20", "exp3", "exp3p", "exp3pswap", "exp3rvu", "omdlb"]

game = gen_dir(10, 20)
path = iesds(game)
os.makedirs("demo_out", exist_ok=True)
series = []
for algo in algos:
    traces = run_batch(RunConfig(game, algo, T, noise=NoiseModel.from_std(0.1)), seeds, path)
    times, mean, sd = aggregate([(tr.times, tr.metrics["poe"]) for tr in traces])
    series.append((algo, times, mean, sd))
    print(f"{algo:24s} final PoE {mean[-1]:.3f} +- {sd[-1]:.3f}")

with open("demo_out/dir_poe_curves.svg", "w") as fh:
    fh.write(svg_chart(series, title=f"DIR(10,20), sigma=0.1, T={T}"))
