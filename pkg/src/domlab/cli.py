"""Command-line front end.

Exit codes: 0 success, 1 runtime or domain error, 2 usage error. Players
and actions are 1-based in everything printed or written here.
"""
import argparse
import concurrent.futures
import json
import os
import re
import sys

import numpy as np

from . import bounds as bnd
from .equilibrium import (construct_dir_epsilon_ce, epsilon_ce_gap, load_distribution,
                          save_distribution, welfare)
from .games import CapabilityError, LemonsParams, gen_dir, gen_lemons, gen_random, load_game, save_game
from .iesds import iesds, lemons_analytic_path, reference_path
from .plot import aggregate, svg_chart
from .simulate import NoiseModel, RunConfig, read_trace_csv, run_batch


class CLIError(Exception):
    pass


def _default_seed():
    value = os.environ.get("DOMLAB_SEED")
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise CLIError(f"DOMLAB_SEED must be an integer, got {value!r}") from None


def _emit(data, out):
    text = json.dumps(data, indent=1) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# gen

def cmd_gen(args):
    if args.type == "dir":
        if args.K is None or args.c is None:
            raise CLIError("--type dir needs --K and --c")
        game = gen_dir(args.K, args.c)
    elif args.type == "lemons":
        n = args.sellers
        q = args.qualities if args.qualities else [n / 2 + i for i in range(1, n + 1)]
        prices = args.prices if args.prices else list(np.arange(n / 2, 3 * n / 2 + 1))
        params = LemonsParams(qualities=q, price_set=[float(p) for p in prices],
                              listing_cost=args.c1, buyer_multiplier=args.c2,
                              quality_noise_std=args.quality_noise, no_trade=args.no_trade)
        game = gen_lemons(params)
    else:
        if args.players is None or args.actions is None:
            raise CLIError("--type random needs --players and --actions")
        game = gen_random(args.players, args.actions, args.seed)
    if args.output:
        save_game(game, args.output)
    else:
        _emit(game.to_dict(), None)
    return 0


# ----------------------------------------------------------------------------
# solve

def cmd_solve(args):
    game = load_game(args.game)
    path = None
    if game.exact and not args.analytic:
        try:
            path, method = iesds(game), "iesds"
        except CapabilityError:
            if game.kind != "lemons":
                raise
    if path is None:
        if game.kind != "lemons":
            raise CLIError("this game has stochastic payoffs and no closed-form path")
        path, method = lemons_analytic_path(game.params), "analytic"
    report = path.to_dict()
    report["method"] = method
    report["dominance_solvable"] = path.dominance_solvable
    _emit(report, args.output)
    return 0


# ----------------------------------------------------------------------------
# simulate

def algo_slug(spec):
    return re.sub(r"[^A-Za-z0-9.]+", "_", spec).strip("_")


def _simulate_one(game_path, algo, T, noise_std, feedback, seeds, dump_dists, outdir):
    game = load_game(game_path)
    path = reference_path(game)
    config = RunConfig(game, algo, T, feedback=feedback, noise=NoiseModel.from_std(noise_std))
    files = {}
    for trace in run_batch(config, seeds, path):
        name = f"{algo_slug(algo)}_seed{trace.seed}.csv"
        trace.to_csv(os.path.join(outdir, name), dump_dists=dump_dists)
        files[name] = {
            "algo": algo,
            "seed": trace.seed,
            "final": {k: float(v[-1]) for k, v in trace.metrics.items()},
        }
    return files


def cmd_simulate(args):
    if args.seeds < 1:
        raise CLIError("--seeds must be at least 1")
    if args.T < 1:
        raise CLIError("--T must be at least 1")
    game = load_game(args.game)
    algos = args.algo or ["exp3dh:b=0.2,beta=20"]
    if len(set(algos)) != len(algos):
        raise CLIError("each --algo may appear only once")
    seeds = [args.seed + k for k in range(args.seeds)]
    # validate every configuration before any work starts
    for algo in algos:
        RunConfig(game, algo, args.T, feedback=args.feedback, noise=NoiseModel.from_std(args.noise_std))
    os.makedirs(args.output, exist_ok=True)
    jobs = [(args.game, algo, args.T, args.noise_std, args.feedback, seeds, args.dump_dists, args.output)
            for algo in sorted(algos)]
    results = {}
    if args.jobs > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for files in pool.map(_simulate_one, *zip(*jobs)):
                results.update(files)
    else:
        for job in jobs:
            results.update(_simulate_one(*job))
    path = reference_path(game)
    manifest = {
        "game": game.to_dict(),
        "T": args.T,
        "feedback": args.feedback,
        "noise_std": args.noise_std,
        "seeds": seeds,
        "algorithms": algos,
        "L0": path.elimination_length if path is not None else None,
        "runs": {k: results[k] for k in sorted(results)},
    }
    with open(os.path.join(args.output, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    for name in sorted(results):
        final = results[name]["final"]
        line = " ".join(f"{k}={v:.4f}" for k, v in final.items())
        print(f"{name}: {line}")
    return 0


# ----------------------------------------------------------------------------
# plot

def _label_for(path):
    manifest = os.path.join(os.path.dirname(os.path.abspath(path)), "manifest.json")
    name = os.path.basename(path)
    if os.path.exists(manifest):
        with open(manifest, encoding="utf-8") as fh:
            runs = json.load(fh).get("runs", {})
        if name in runs:
            return runs[name]["algo"]
    return re.sub(r"_seed-?\d+\.csv$", "", name)


def cmd_plot(args):
    groups = {}
    for path in args.traces:
        metrics, _ = read_trace_csv(path)
        label = _label_for(path)
        for seed, by_metric in metrics.items():
            if args.metric not in by_metric:
                raise CLIError(f"{path}: no '{args.metric}' rows for seed {seed}")
            rows = by_metric[args.metric]
            groups.setdefault(label, []).append(([t for t, _ in rows], [v for _, v in rows]))
    series = [(label,) + aggregate(runs) for label, runs in groups.items()]
    svg = svg_chart(series, title=args.title or "", ylabel=args.metric)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return 0


# ----------------------------------------------------------------------------
# bounds and equilibrium tools

def cmd_bounds(args):
    T1 = bnd.t1_bound(args.K, args.N, args.sigma, args.beta, args.b, args.Delta, args.eps, args.delta)
    L0 = args.L0 if args.L0 is not None else 2 * args.K - 2
    schedule = bnd.threshold_schedule(T1, L0, args.Delta, args.beta, args.delta)
    _emit({"T1": T1, "L0": L0, "schedule": [{"l": l + 1, "T_l": T} for l, T in enumerate(schedule)]},
          args.output)
    return 0


def cmd_construct_ce(args):
    pi = construct_dir_epsilon_ce(args.K, args.c, args.eps)
    if args.output:
        save_distribution(pi, args.output)
    else:
        _emit(pi.to_dict(), None)
    game = gen_dir(args.K, args.c)
    gap = epsilon_ce_gap(game, pi)
    print(json.dumps({"gap": gap, "welfare": welfare(game, pi),
                      "mass_on_KK": pi.mass((args.K - 1, args.K - 1))}), file=sys.stderr)
    return 0


def cmd_verify_ce(args):
    game = load_game(args.game)
    pi = load_distribution(args.dist)
    gap = epsilon_ce_gap(game, pi)
    _emit({"gap": gap, "eps": args.eps, "pass": bool(gap <= args.eps), "welfare": welfare(game, pi)},
          args.output)
    return 0


# ----------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="domlab", description="Dominance-elimination learning lab.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a game file")
    p.add_argument("--type", choices=["dir", "lemons", "random"], required=True)
    p.add_argument("--K", type=int, help="DIR actions per player")
    p.add_argument("--c", type=float, help="DIR penalty")
    p.add_argument("--sellers", type=int, default=50)
    p.add_argument("--qualities", type=float, nargs="+", help="default: N/2 + i")
    p.add_argument("--prices", type=float, nargs="+", help="default: N/2, ..., 3N/2")
    p.add_argument("--c1", type=float, default=3.0, help="listing cost")
    p.add_argument("--c2", type=float, default=1.5, help="buyer multiplier")
    p.add_argument("--quality-noise", type=float, default=0.0, help="std of perceived quality")
    p.add_argument("--no-trade", choices=["posted", "zero"], default="posted")
    p.add_argument("--players", type=int)
    p.add_argument("--actions", type=int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run IESDS and print the elimination path")
    p.add_argument("game")
    p.add_argument("--analytic", action="store_true", help="closed-form path for lemons markets")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="self-play runs written as trace CSVs")
    p.add_argument("--game", required=True)
    p.add_argument("--algo", action="append", help="algorithm spec, repeatable")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--seeds", type=int, default=1, help="number of seeds")
    p.add_argument("--seed", type=int, default=None, help="first seed (env DOMLAB_SEED)")
    p.add_argument("--feedback", choices=["bandit", "exact"], default="bandit")
    p.add_argument("--dump-dists", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output", default="traces")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="SVG chart of trace CSVs")
    p.add_argument("traces", nargs="+")
    p.add_argument("--metric", default="poe")
    p.add_argument("--title")
    p.add_argument("-o", "--output", default="poe.svg")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bounds", help="round thresholds for Exp3-DH elimination")
    for name, typ in [("--K", int), ("--N", int), ("--sigma", float), ("--beta", float), ("--b", float),
                      ("--Delta", float), ("--eps", float), ("--delta", float)]:
        p.add_argument(name, type=typ, required=True)
    p.add_argument("--L0", type=int, help="number of thresholds (default 2K-2)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("construct-ce", help="eps-CE of DIR(K, c) avoiding (K, K)")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_construct_ce)

    p = sub.add_parser("verify-ce", help="eps-CE gap of a joint distribution")
    p.add_argument("--game", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify_ce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.func(args)
    except (CLIError, ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"domlab {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
