"""PoE curves on the 50-seller lemons market with noisy quality perception.

    python3 demos/lemons_poe_curves.py [T] [seeds]
"""
import os
import sys

from domlab.games import LemonsParams, gen_lemons
from domlab.iesds import reference_path
from domlab.plot import aggregate, svg_chart
from domlab.simulate import NoiseModel, RunConfig, run_batch

T = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
seeds = range(int(sys.argv[2]) if len(sys.argv) > 2 else 3)

game = gen_lemons(LemonsParams.benchmark(50, quality_noise_std=5.0))
path = reference_path(game)  # closed form of the noise-free market
print(f"L0 = {path.elimination_length}, U_max = {game.payoff_bound}")
os.makedirs("demo_out", exist_ok=True)
series = []
for algo in ["exp3dh:b=0.5,beta=33", "exp3", "exp3p", "exp3rvu", "omdlb", "exp3pswap"]:
    traces = run_batch(RunConfig(game, algo, T, noise=NoiseModel.from_std(0.1)), seeds, path)
    times, mean, sd = aggregate([(tr.times, tr.metrics["poe"]) for tr in traces])
    series.append((algo, times, mean, sd))
    print(f"{algo:24s} PoE {mean[0]:.3f} -> {mean[-1]:.3f}")

with open("demo_out/lemons_poe_curves.svg", "w") as fh:
    fh.write(svg_chart(series, title=f"Lemons N=50, T={T}"))
