"""Iterated dominance elimination, no-regret learners and self-play experiments."""
from .games import DIRGame, LemonsGame, LemonsParams, TensorGame, gen_dir, gen_lemons, gen_random
from .iesds import EliminationPath, find_dominator, iesds, lemons_analytic_path
from .learners import make_learner
from .simulate import NoiseModel, RunConfig, run_batch, run_selfplay

__version__ = "0.1.0"
