"""Finite normal-form games as payoff oracles.

Actions and players are 0-based everywhere inside the package. User-facing
text (CLI output, JSON written for humans) uses 1-based indices.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

ENUMERATION_LIMIT = 10**6


class GameError(ValueError):
    """Invalid game parameters or an invalid query."""


class CapabilityError(GameError):
    """The game cannot answer this kind of query (e.g. exact expectations)."""


class MissingRNGError(GameError):
    pass


class Game:
    """Base class: ``num_players`` players, ``action_counts[n]`` actions each.

    Subclasses implement :meth:`payoffs` (vectorized over profiles). Games
    with deterministic payoffs also expose dense payoff arrays through
    :meth:`payoff_array`, which is what exact expectations and the dominance
    solver run on.
    """

    kind = "abstract"
    #: number of standard-normal shocks consumed per profile evaluation
    env_dim = 0

    def __init__(self, action_counts, payoff_bound):
        self.action_counts = tuple(int(k) for k in action_counts)
        if not self.action_counts or min(self.action_counts) < 1:
            raise GameError("every player needs at least one action")
        self.num_players = len(self.action_counts)
        self.payoff_bound = float(payoff_bound)

    @property
    def num_profiles(self):
        return math.prod(self.action_counts)

    @property
    def scale(self):
        """Divisor that brings payoffs to normalized units.

        Explicit tensors and DIR games are taken to be in normalized units
        already; games with a native payoff range (lemons) divide by U_max.
        """
        return 1.0

    @property
    def exact(self):
        """True when payoffs are deterministic and exact expectations work."""
        return self.env_dim == 0

    # -- validation ---------------------------------------------------------
    def check_player(self, player):
        if not (0 <= int(player) < self.num_players):
            raise GameError(f"player index {player} out of range")
        return int(player)

    def check_profile(self, profile):
        profile = np.asarray(profile, dtype=np.int64)
        if profile.shape != (self.num_players,):
            raise GameError(f"profile must have {self.num_players} entries")
        if np.any(profile < 0) or np.any(profile >= self.action_counts):
            raise GameError(f"profile {profile.tolist()} out of range")
        return profile

    # -- payoffs ------------------------------------------------------------
    def payoffs(self, profiles, rng=None, shocks=None):
        """Payoffs of all players for a batch of profiles, shape ``(S, N)``.

        ``shocks`` (shape ``(S, env_dim)``) lets a caller supply the
        environment noise itself; otherwise it is drawn from ``rng``.
        """
        raise NotImplementedError

    def payoff(self, player, profile, rng=None):
        player = self.check_player(player)
        profile = self.check_profile(profile)
        return float(self.payoffs(profile[None, :], rng=rng)[0, player])

    def _require_exact(self):
        if not self.exact:
            raise CapabilityError(f"{self.kind} game with stochastic payoffs has no exact expectations")

    def payoff_array(self, player):
        """Dense array of ``u_player`` with shape ``action_counts``."""
        self._require_exact()
        player = self.check_player(player)
        return self._all_payoff_arrays()[player]

    def _all_payoff_arrays(self):
        cached = getattr(self, "_arrays", None)
        if cached is None:
            if self.num_profiles > ENUMERATION_LIMIT:
                raise CapabilityError(
                    f"{self.num_profiles} profiles exceed the enumeration limit {ENUMERATION_LIMIT}")
            profiles = np.indices(self.action_counts).reshape(self.num_players, -1).T
            values = self.payoffs(profiles)
            cached = values.T.reshape((self.num_players,) + self.action_counts)
            cached.setflags(write=False)
            self._arrays = cached
        return cached

    def to_dict(self):
        raise NotImplementedError


def _check_mixed(game, profile):
    if len(profile) != game.num_players:
        raise GameError(f"need one mixed strategy per player ({game.num_players})")
    out = []
    for n, x in enumerate(profile):
        x = np.asarray(x, dtype=float)
        if x.shape != (game.action_counts[n],):
            raise GameError(f"strategy of player {n} must have {game.action_counts[n]} entries")
        if np.any(x < 0) or abs(x.sum() - 1.0) > 1e-9:
            raise GameError(f"strategy of player {n} is not a distribution")
        out.append(x)
    return out


def action_payoff_vector(game, player, profile):
    """Expected payoff of each pure action of ``player`` against the others.

    ``profile`` is a full mixed profile; the entry for ``player`` itself is
    ignored (pass ``None`` there if convenient).
    """
    game._require_exact()
    player = game.check_player(player)
    profile = list(profile)
    if profile[player] is None:
        profile[player] = np.full(game.action_counts[player], 1.0 / game.action_counts[player])
    strategies = _check_mixed(game, profile)
    acc = game.payoff_array(player)
    # contract the trailing players first so the remaining axes keep their order
    for n in range(game.num_players - 1, -1, -1):
        if n != player:
            acc = np.tensordot(acc, strategies[n], axes=([n], [0]))
    return np.asarray(acc, dtype=float)


def expected_payoff(game, player, profile):
    """u_player(x) for a mixed profile x, the full product-weighted sum."""
    strategies = _check_mixed(game, profile)
    return float(action_payoff_vector(game, player, profile) @ strategies[game.check_player(player)])


class TensorGame(Game):
    """Explicit payoff tensor of shape ``(N, K_1, ..., K_N)``."""

    kind = "tensor"

    def __init__(self, payoffs):
        payoffs = np.array(payoffs, dtype=float)
        if payoffs.ndim < 2 or payoffs.shape[0] != payoffs.ndim - 1:
            raise GameError("payoff tensor must have shape (N, K_1, ..., K_N)")
        if not np.all(np.isfinite(payoffs)):
            raise GameError("payoffs must be finite")
        super().__init__(payoffs.shape[1:], np.abs(payoffs).max())
        payoffs.setflags(write=False)
        self._arrays = payoffs

    @property
    def tensor(self):
        return self._arrays

    def payoffs(self, profiles, rng=None, shocks=None):
        profiles = np.asarray(profiles)
        return self._arrays[(slice(None),) + tuple(profiles.T)].T

    def to_dict(self):
        return {
            "kind": "tensor",
            "players": self.num_players,
            "actions": list(self.action_counts),
            "payoffs": self._arrays.ravel().tolist(),
        }


class DIRGame(TensorGame):
    """Diamond-in-the-rough game with K actions per player and penalty c.

    Player 0 (A) picks row i, player 1 (B) column j, both 1-based in the
    formulas below, all divided by rho = max(K, c)::

        u_A(i, j) = i  if i <= j + 1 else -c
        u_B(i, j) = j  if j <= i     else -c
    """

    kind = "dir"

    def __init__(self, K, c):
        if int(K) != K or K < 2:
            raise GameError("DIR needs an integer K >= 2")
        if not (c > 0 and math.isfinite(c)):
            raise GameError("DIR needs c > 0")
        self.K = int(K)
        self.c = float(c)
        self.rho = max(self.K, self.c)
        i = np.arange(1, self.K + 1)[:, None]
        j = np.arange(1, self.K + 1)[None, :]
        u_a = np.where(i <= j + 1, i, -self.c) / self.rho
        u_b = np.where(j <= i, j, -self.c) / self.rho
        super().__init__(np.stack([u_a, u_b]))
        self.payoff_bound = 1.0

    def to_dict(self):
        return {"kind": "dir", "K": self.K, "c": self.c}


def gen_dir(K, c):
    return DIRGame(K, c)


def gen_random(N, K, seed):
    """Tensor game with i.i.d. uniform payoffs in [-1, 1].

    ``K`` is an int (same for all players) or a list of action counts.
    """
    counts = [int(K)] * int(N) if np.isscalar(K) else [int(k) for k in K]
    if len(counts) != N or N < 1:
        raise GameError("need one action count per player")
    size = N * math.prod(counts)
    if size > ENUMERATION_LIMIT:
        raise GameError(f"tensor of {size} entries exceeds the limit {ENUMERATION_LIMIT}")
    rng = np.random.default_rng(seed)
    return TensorGame(rng.uniform(-1.0, 1.0, size=[N] + counts))


# --------------------------------------------------------------------------
# Market for lemons

NO_TRADE_CONVENTIONS = ("posted", "zero")


@dataclass(frozen=True)
class LemonsParams:
    """Parameters of the buyer/sellers lemons market.

    ``no_trade`` selects the buyer's payoff when no car changes hands:
    ``"posted"`` evaluates ``c2 * qbar - p`` with an empty average taken as 0
    (so the buyer loses her posted price), ``"zero"`` pays nothing.
    """

    qualities: tuple
    price_set: tuple
    listing_cost: float = 3.0
    buyer_multiplier: float = 1.5
    quality_noise_std: float = 0.0
    no_trade: str = "posted"
    num_sellers: int = field(default=None)

    def __post_init__(self):
        q = tuple(float(v) for v in self.qualities)
        prices = tuple(float(v) for v in self.price_set)
        object.__setattr__(self, "qualities", q)
        object.__setattr__(self, "price_set", prices)
        if self.num_sellers is None:
            object.__setattr__(self, "num_sellers", len(q))
        if self.num_sellers != len(q) or not q:
            raise GameError("num_sellers must match the number of qualities")
        if any(b <= a for a, b in zip(q, q[1:])):
            raise GameError("qualities must be strictly increasing")
        if not prices or any(b < a for a, b in zip(prices, prices[1:])):
            raise GameError("price set must be nonempty and sorted ascending")
        if len(set(prices)) != len(prices):
            raise GameError("price set has duplicates")
        if not self.listing_cost > 0:
            raise GameError("listing cost c1 must be positive")
        if not self.buyer_multiplier > 1:
            raise GameError("buyer multiplier c2 must exceed 1")
        if not self.quality_noise_std >= 0:
            raise GameError("quality noise std must be nonnegative")
        if self.no_trade not in NO_TRADE_CONVENTIONS:
            raise GameError(f"no_trade must be one of {NO_TRADE_CONVENTIONS}")
        values = q + prices + (self.listing_cost, self.buyer_multiplier, self.quality_noise_std)
        if not all(math.isfinite(v) for v in values):
            raise GameError("lemons parameters must be finite")

    @classmethod
    def benchmark(cls, num_sellers=50, **overrides):
        """q_i = N/2 + i, prices N/2..3N/2 on the integer grid, c1=3, c2=1.5."""
        half = num_sellers / 2
        q = [half + i for i in range(1, num_sellers + 1)]
        prices = list(np.arange(half, 3 * half + 1))
        kwargs = dict(listing_cost=3.0, buyer_multiplier=1.5)
        kwargs.update(overrides)
        return cls(qualities=q, price_set=prices, **kwargs)


class LemonsGame(Game):
    """Player 0 is the buyer (one action per price), players 1..N_s are
    sellers with actions 0 = keep the car and 1 = list it.

    A listed car of seller i sells when its perceived quality
    ``q_i + N(0, sigma_q^2)`` is at most the posted price p. Seller payoff is
    ``a_i * (b_i * (p - q_i) - c1)``; the buyer gets ``c2 * qbar - p`` where
    qbar is the mean true quality of the cars sold.
    """

    kind = "lemons"

    def __init__(self, params):
        if not isinstance(params, LemonsParams):
            raise GameError("gen_lemons expects LemonsParams")
        self.params = params
        self._q = np.array(params.qualities)
        self._p = np.array(params.price_set)
        self.env_dim = params.num_sellers if params.quality_noise_std > 0 else 0
        super().__init__([len(self._p)] + [2] * params.num_sellers, self._bound())

    @property
    def scale(self):
        return self.payoff_bound

    def _bound(self):
        pr = self.params
        q, p = self._q, self._p
        c1, c2 = pr.listing_cost, pr.buyer_multiplier
        # qbar lies in [q_1, q_N] whenever something sells
        buyer = max(abs(c2 * q[-1] - p[0]), abs(c2 * q[0] - p[-1]))
        if pr.no_trade == "posted":
            buyer = max(buyer, abs(p).max())
        if pr.quality_noise_std > 0:
            # a noisy reservation value can sell at any price
            seller = max(abs(p[0] - q[-1] - c1), abs(p[-1] - q[0] - c1), c1)
        else:
            gains = p[None, :] - q[:, None]
            seller = max(np.abs(np.where(gains >= 0, gains, 0.0) - c1).max(), c1)
        return float(max(buyer, seller))

    def payoffs(self, profiles, rng=None, shocks=None):
        pr = self.params
        profiles = np.asarray(profiles)
        price = self._p[profiles[:, 0]]
        listed = profiles[:, 1:] == 1
        if self.env_dim:
            if shocks is None:
                if rng is None:
                    raise MissingRNGError("lemons game with quality noise needs an RNG")
                shocks = rng.standard_normal((len(profiles), self.env_dim))
            perceived = self._q + pr.quality_noise_std * shocks
        else:
            perceived = np.broadcast_to(self._q, listed.shape)
        sold = listed & (perceived <= price[:, None])
        out = np.empty(profiles.shape, dtype=float)
        out[:, 1:] = listed * (sold * (price[:, None] - self._q) - pr.listing_cost)
        n_sold = sold.sum(axis=1)
        qbar = (sold * self._q).sum(axis=1) / np.maximum(n_sold, 1)
        no_trade = -price if pr.no_trade == "posted" else 0.0
        out[:, 0] = np.where(n_sold > 0, pr.buyer_multiplier * qbar - price, no_trade)
        return out

    def to_dict(self):
        pr = self.params
        return {
            "kind": "lemons",
            "num_sellers": pr.num_sellers,
            "qualities": list(pr.qualities),
            "price_set": list(pr.price_set),
            "listing_cost": pr.listing_cost,
            "buyer_multiplier": pr.buyer_multiplier,
            "quality_noise_std": pr.quality_noise_std,
            "no_trade": pr.no_trade,
        }


def gen_lemons(params):
    return LemonsGame(params)


# --------------------------------------------------------------------------
# JSON game files

def game_from_dict(data):
    kind = data.get("kind")
    if kind == "dir":
        return DIRGame(data["K"], data["c"])
    if kind == "lemons":
        keys = {"num_sellers", "qualities", "price_set", "listing_cost",
                "buyer_multiplier", "quality_noise_std", "no_trade"}
        unknown = set(data) - keys - {"kind"}
        if unknown:
            raise GameError(f"unknown lemons fields: {sorted(unknown)}")
        return LemonsGame(LemonsParams(**{k: v for k, v in data.items() if k in keys}))
    if kind == "tensor":
        counts = [int(k) for k in data["actions"]]
        if int(data["players"]) != len(counts):
            raise GameError("'players' does not match 'actions'")
        flat = np.asarray(data["payoffs"], dtype=float)
        expected = len(counts) * math.prod(counts)
        if flat.size != expected:
            raise GameError(f"tensor game needs {expected} payoffs, got {flat.size}")
        return TensorGame(flat.reshape([len(counts)] + counts))
    raise GameError(f"unknown game kind {kind!r}")


def load_game(path):
    with open(path, encoding="utf-8") as fh:
        return game_from_dict(json.load(fh))


def save_game(game, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(game.to_dict(), fh, indent=1)
        fh.write("\n")
