"""Iterated elimination of strictly dominated strategies."""
import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .games import CapabilityError, ENUMERATION_LIMIT, GameError, LemonsParams
from .lp import maximin

STRICT_TOL = 1e-9


class AnalyticPathUnavailable(GameError):
    """The closed-form lemons path does not apply to these parameters."""


@dataclass
class DominanceCertificate:
    player: int
    dominated_action: int
    dominator: np.ndarray
    margin: float

    def to_dict(self):
        support = np.flatnonzero(self.dominator > 0)
        return {
            "player": self.player + 1,
            "action": self.dominated_action + 1,
            "dominator": {str(int(a) + 1): float(self.dominator[a]) for a in support},
            "margin": self.margin,
        }


@dataclass
class EliminationPath:
    """Canonical elimination path.

    ``iterations[l]`` holds the (player, action) pairs removed at iteration
    l + 1; the nested sets E_l are the running unions.
    """

    action_counts: tuple
    iterations: list
    certificates: dict = field(default_factory=dict)

    def __post_init__(self):
        self.action_counts = tuple(self.action_counts)
        L0 = len(self.iterations)
        self.distances = [np.full(k, L0, dtype=np.int64) for k in self.action_counts]
        for l, removed in enumerate(self.iterations):
            if not removed:
                raise ValueError("every iteration must remove at least one action")
            for n, a in removed:
                self.distances[n][a] = l
        for n, k in enumerate(self.action_counts):
            if np.all(self.distances[n] < L0):
                raise ValueError(f"player {n} lost every action")

    @property
    def elimination_length(self):
        return len(self.iterations)

    L0 = elimination_length

    @property
    def sets(self):
        out, acc = [], set()
        for removed in self.iterations:
            acc = acc | set(removed)
            out.append(frozenset(acc))
        return out

    @property
    def gap(self):
        if not self.certificates:
            return None
        return min(c.margin for c in self.certificates.values())

    @property
    def survivors(self):
        L0 = self.elimination_length
        return [tuple(int(a) for a in np.flatnonzero(d == L0)) for d in self.distances]

    @property
    def dominance_solvable(self):
        return all(len(s) == 1 for s in self.survivors)

    def distance(self, player, action):
        if not (0 <= player < len(self.action_counts)):
            raise GameError(f"player index {player} out of range")
        if not (0 <= action < self.action_counts[player]):
            raise GameError(f"action index {action} out of range")
        return int(self.distances[player][action])

    def to_dict(self):
        """JSON-ready report with 1-based players and actions."""
        return {
            "L0": self.elimination_length,
            "Delta": self.gap,
            "sets": [[{"player": n + 1, "action": a + 1} for n, a in sorted(s)] for s in self.sets],
            "survivors": [[a + 1 for a in s] for s in self.survivors],
            "distances": [[int(v) for v in d] for d in self.distances],
            "certificates": [self.certificates[key].to_dict() for key in sorted(self.certificates)],
        }


def elimination_distance(path, player, action):
    """Number of iterations an action survives: l - 1 if it first appears in
    E_l, and L0 for actions that are never eliminated."""
    return path.distance(player, action)


def _normalized_array(game, player):
    arr = game.payoff_array(player)
    return arr / game.scale if game.scale > 0 else arr


def _response_matrix(game, player, surviving):
    """Rows: surviving opponent profiles; columns: the player's survivors."""
    opp = math.prod(len(s) for m, s in enumerate(surviving) if m != player)
    if opp > ENUMERATION_LIMIT:
        raise CapabilityError(f"{opp} opponent profiles exceed the enumeration limit")
    sub = _normalized_array(game, player)[np.ix_(*[np.asarray(s) for s in surviving])]
    return np.moveaxis(sub, player, 0).reshape(len(surviving[player]), -1).T


def _full_surviving(game):
    return [tuple(range(k)) for k in game.action_counts]


def find_dominator(game, player, action, surviving=None, tol=STRICT_TOL):
    """Max-margin mixed dominator of ``action`` on the surviving subgame.

    Solves max eps s.t. sum_a' x_a' u(a', r) >= u(action, r) + eps for every
    surviving opponent profile r, with x a distribution over the player's
    surviving actions. Returns a certificate when the optimum exceeds ``tol``.
    """
    game._require_exact()
    surviving = _full_surviving(game) if surviving is None else [tuple(s) for s in surviving]
    own = list(surviving[player])
    if action not in own:
        raise GameError(f"action {action} of player {player} is not surviving")
    R = _response_matrix(game, player, surviving)
    G = R - R[:, [own.index(action)]]
    margin, x = maximin(G)
    if margin <= tol:
        return None
    dominator = np.zeros(game.action_counts[player])
    dominator[own] = x
    return DominanceCertificate(player, action, dominator, margin)


def find_pure_dominator(game, player, action, surviving=None, tol=STRICT_TOL):
    """Best pure dominator, or None when no single action dominates."""
    game._require_exact()
    surviving = _full_surviving(game) if surviving is None else [tuple(s) for s in surviving]
    own = list(surviving[player])
    R = _response_matrix(game, player, surviving)
    gaps = (R - R[:, [own.index(action)]]).min(axis=0)
    best = int(np.argmax(gaps))
    if gaps[best] <= tol:
        return None
    dominator = np.zeros(game.action_counts[player])
    dominator[own[best]] = 1.0
    return DominanceCertificate(player, action, dominator, float(gaps[best]))


def verify_certificate(game, cert, surviving, tol=STRICT_TOL):
    """Replay a certificate; True when its margin holds on every profile."""
    own = list(surviving[cert.player])
    R = _response_matrix(game, cert.player, surviving)
    achieved = R @ cert.dominator[own] - R[:, own.index(cert.dominated_action)]
    return bool(achieved.min() >= cert.margin - tol and cert.margin > tol)


def iesds(game, tol=STRICT_TOL):
    """Simultaneous-maximal IESDS: each iteration removes every action that
    is dominated against the start-of-iteration surviving sets."""
    game._require_exact()
    surviving = _full_surviving(game)
    iterations, certificates = [], {}
    while True:
        removed = []
        for n in range(game.num_players):
            if len(surviving[n]) < 2:
                continue
            for a in surviving[n]:
                cert = find_dominator(game, n, a, surviving, tol)
                if cert is not None:
                    removed.append((n, a))
                    certificates[(n, a)] = cert
        if not removed:
            break
        iterations.append(removed)
        gone = set(removed)
        surviving = [tuple(a for a in s if (n, a) not in gone) for n, s in enumerate(surviving)]
    return EliminationPath(game.action_counts, iterations, certificates)


# --------------------------------------------------------------------------
# Lemons market in closed form

def lemons_block_size(params):
    """Spacing k with q_i - q_{i-k} >= c1 > q_i - q_{i-k+1} for all i."""
    q = np.asarray(params.qualities)
    n = len(q)
    c1 = params.listing_cost
    for k in range(1, n + 1):
        far = q[k:] - q[:-k] if k < n else np.empty(0)
        near = q[k - 1:] - q[:n - k + 1]
        if np.all(far >= c1) and np.all(near < c1):
            return k
    raise AnalyticPathUnavailable("qualities admit no uniform spacing index k for this listing cost")


def lemons_lower_bound(params):
    k = lemons_block_size(params)
    return 2 * math.ceil(params.num_sellers / k) - 1


def lemons_analytic_path(params):
    """Closed-form elimination path of the noise-free lemons market.

    Sellers above N - k exit first (listing can never recover the listing
    cost), then the buyer drops every price that only buys cars from sellers
    who left, and so on in blocks of k. Once the last block exits, the buyer
    keeps only her lowest price when several prices remain.
    """
    if not isinstance(params, LemonsParams):
        raise GameError("expected LemonsParams")
    if params.quality_noise_std != 0:
        raise AnalyticPathUnavailable("the closed form needs quality_noise_std = 0")
    if params.no_trade != "posted":
        raise AnalyticPathUnavailable(
            "with a zero no-trade payoff every price ties when nobody lists, so elimination stalls")
    q = list(params.qualities)
    prices = list(params.price_set)
    n = params.num_sellers
    if not set(q) <= set(prices):
        raise AnalyticPathUnavailable("price set must contain every quality")
    if prices[-1] != q[-1]:
        raise AnalyticPathUnavailable("the highest price must equal the highest quality")
    extra = [p for p in prices if p not in set(q)]
    if len(extra) > 1 or (extra and extra[0] >= q[0]):
        raise AnalyticPathUnavailable("prices outside the qualities allow at most one price below q_1")
    k = lemons_block_size(params)
    blocks = math.ceil(n / k)
    iterations = []
    # sellers are players 1..n; seller i (1-based) owns quality q[i-1]
    top = n
    for j in range(blocks):
        low = max(top - k, 0)
        iterations.append([(i, 1) for i in range(low + 1, top + 1)])
        if j < blocks - 1:
            cut_hi, cut_lo = q[top - 1], q[low - 1]
            iterations.append([(0, a) for a, p in enumerate(prices) if cut_lo < p <= cut_hi])
        top = low
    nu = n + k - blocks * k
    leftover = [(0, a) for a, p in enumerate(prices) if prices[0] < p <= q[nu - 1]]
    if leftover:
        iterations.append(leftover)
    counts = [len(prices)] + [2] * n
    return EliminationPath(counts, iterations)


def reference_path(game):
    """Elimination path used for progress metrics.

    Exact IESDS when the game is deterministic and small enough; for lemons
    markets that are noisy or too large, the closed-form path of the
    noise-free market. Returns None when neither is available.
    """
    from .games import LemonsGame

    if game.exact:
        try:
            return iesds(game)
        except CapabilityError:
            pass
    if isinstance(game, LemonsGame):
        params = game.params
        if params.quality_noise_std:
            params = dataclasses.replace(params, quality_noise_std=0.0)
        try:
            return lemons_analytic_path(params)
        except AnalyticPathUnavailable:
            return None
    return None
