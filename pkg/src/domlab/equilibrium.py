"""Correlated-equilibrium tools, welfare, NE checks and the DIR constructions."""
import json
import math
from dataclasses import dataclass

import numpy as np

from .games import DIRGame, GameError


@dataclass
class JointDistribution:
    """Distribution over joint action profiles (0-based profiles)."""

    profiles: np.ndarray
    probs: np.ndarray

    def __init__(self, support):
        """``support`` is an iterable of (profile, probability) pairs."""
        items = [(tuple(int(a) for a in prof), float(p)) for prof, p in support]
        if not items:
            raise GameError("distribution needs a nonempty support")
        profiles = [prof for prof, _ in items]
        if len(set(profiles)) != len(profiles):
            raise GameError("distribution support has repeated profiles")
        self.profiles = np.array(profiles, dtype=np.int64)
        self.probs = np.array([p for _, p in items])
        if np.any(self.probs < 0) or not np.all(np.isfinite(self.probs)):
            raise GameError("probabilities must be finite and nonnegative")
        if abs(self.probs.sum() - 1.0) > 1e-9:
            raise GameError(f"probabilities sum to {self.probs.sum()!r}, not 1")

    def mass(self, profile):
        hit = np.all(self.profiles == np.asarray(profile), axis=1)
        return float(self.probs[hit].sum())

    def check_game(self, game):
        if self.profiles.shape[1] != game.num_players:
            raise GameError("distribution profiles do not match the number of players")
        for prof in self.profiles:
            game.check_profile(prof)

    def to_dict(self):
        return {"support": [{"profile": [int(a) + 1 for a in prof], "p": float(p)}
                            for prof, p in zip(self.profiles, self.probs)]}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls([([a - 1 for a in item["profile"]], item["p"]) for item in data["support"]])
        except (KeyError, TypeError) as exc:
            raise GameError(f"malformed distribution: {exc}") from None


def load_distribution(path):
    with open(path, encoding="utf-8") as fh:
        return JointDistribution.from_dict(json.load(fh))


def save_distribution(pi, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pi.to_dict(), fh, indent=1)
        fh.write("\n")


def _deviation_gains(game, pi, player):
    """gains[a, a'] = sum over profiles recommending a of pi * (u(a') - u(a))."""
    K = game.action_counts[player]
    arr = game.payoff_array(player)
    gains = np.zeros((K, K))
    for prof, p in zip(pi.profiles, pi.probs):
        idx = list(prof)
        idx[player] = slice(None)
        row = arr[tuple(idx)]
        a = prof[player]
        gains[a] += p * (row - row[a])
    return gains


def epsilon_ce_gap(game, pi):
    """Largest expected gain from obeying-then-deviating, over players,
    recommended actions with positive mass, and deviations a' != a.

    Negative values mean every deviation strictly hurts.
    """
    game._require_exact()
    pi.check_game(game)
    best = -math.inf
    for n in range(game.num_players):
        K = game.action_counts[n]
        if K < 2:
            continue
        gains = _deviation_gains(game, pi, n)
        recommended = np.unique(pi.profiles[pi.probs > 0, n])
        for a in recommended:
            best = max(best, np.delete(gains[a], a).max())
    return float(best)


def welfare(game, pi):
    """Expected sum of payoffs under pi."""
    game._require_exact()
    pi.check_game(game)
    total = 0.0
    for n in range(game.num_players):
        arr = game.payoff_array(n)
        total += float(pi.probs @ arr[tuple(pi.profiles.T)])
    return total


def verify_ne(game, profile):
    """Return (is_ne, slacks): slack_n = min over deviations of
    u_n(profile) - u_n(deviation). Players with one action get +inf."""
    game._require_exact()
    profile = game.check_profile(profile)
    slacks = []
    for n in range(game.num_players):
        idx = list(profile)
        idx[n] = slice(None)
        row = game.payoff_array(n)[tuple(idx)]
        others = np.delete(row, profile[n])
        slacks.append(float(row[profile[n]] - others.max()) if others.size else math.inf)
    return all(s >= 0 for s in slacks), slacks


# --------------------------------------------------------------------------
# DIR constructions

def _log_partial_sums(log_rho, log_c, count):
    """log(rho * sum_{i<=k} c^{i-1}) for k = 1..count."""
    terms = log_rho + np.arange(count) * log_c
    return np.logaddexp.accumulate(terms)


def staircase_profile(i):
    """i-th (1-based) staircase profile, 0-based: (m,m) for i=2m-1 and
    (m+1,m) for i=2m, in 1-based actions."""
    m = (i + 1) // 2
    return (m - 1, m - 1) if i % 2 else (m, m - 1)


def construct_dir_epsilon_ce(K, c, eps):
    """eps-CE of DIR(K, c) on the staircase below (K, K).

    The probabilities are delta_i = rho*eps*c^(i-1) for i < k and the
    remainder on step k, where k is the smallest index with
    1/eps <= rho * sum_{i<=k} c^(i-1).
    """
    if int(K) != K or K < 2:
        raise GameError("K must be an integer >= 2")
    if not c > 1:
        raise GameError("the construction needs c > 1")
    if not 0 < eps < 1:
        raise GameError("eps must lie in (0, 1)")
    K = int(K)
    rho = max(K, c)
    steps = 2 * K - 1
    log_rho, log_c, log_inv = math.log(rho), math.log(c), -math.log(eps)
    cums = _log_partial_sums(log_rho, log_c, steps)
    # a relative slack keeps exact boundary cases such as 1/eps = rho*(1+c) on step k
    feasible = np.flatnonzero(cums >= log_inv - 1e-12)
    if feasible.size == 0:
        raise GameError("1/eps exceeds rho * sum_{i<=2K-1} c^(i-1); no step k exists")
    k = int(feasible[0]) + 1
    deltas = [math.exp(log_rho + math.log(eps) + (i - 1) * log_c) for i in range(1, k)]
    last = max(0.0, 1.0 - math.fsum(deltas))
    support = [(staircase_profile(i), d) for i, d in enumerate(deltas + [last], start=1)]
    return JointDistribution(support)


def zero_mass_guaranteed(K, c, eps):
    """True when log(1/eps) <= (2K-2) log c, so (K, K) receives no mass."""
    return -math.log(eps) <= (2 * K - 2) * math.log(c)


def welfare_ratio_bound(K, c, eps):
    """(1 + ceil(log(1/eps)/log c)) / (2K): bound on welfare relative to 2K/rho."""
    steps = -math.log(eps) / math.log(c)
    return (1 + math.ceil(steps - 1e-9)) / (2 * K)


def variational_witness(K, c, i):
    """<v(x), x - x*> at x = (e_i, e_i), x* = (e_K, e_K) in DIR(K, c), with i
    1-based. Positive values show the variational inequality fails."""
    if int(i) != i or not 1 <= i <= K - 1:
        raise GameError("witness index must satisfy 1 <= i <= K-1")
    game = DIRGame(K, c)
    ua, ub = game.payoff_array(0), game.payoff_array(1)
    i0, k0 = int(i) - 1, K - 1
    return float(ua[i0, i0] - ua[k0, i0] + ub[i0, i0] - ub[i0, k0])
