"""Self-play simulation, checkpointed traces and elimination metrics."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .games import CapabilityError, Game
from .learners import CapabilityMismatch, is_full_information, make_learner, parse_algorithm

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1
CHUNK = 4096
CSV_HEADER = ["t", "seed", "agent", "metric", "value"]


class SimulationError(RuntimeError):
    pass


def stream_seed(master_seed, index):
    """64-bit seed of stream ``index``: master XOR (index * golden ratio)."""
    return (int(master_seed) ^ ((index * GOLDEN) & MASK64)) & MASK64


def stream_rng(master_seed, index):
    return np.random.Generator(np.random.PCG64(stream_seed(master_seed, index)))


class StreamBuffer:
    """Chunked draws from one generator per row; ``next()`` returns the
    next (rows, width) block without a Python call per generator."""

    def __init__(self, rngs, width, kind, chunk=CHUNK):
        self.rngs, self.width, self.kind, self.chunk = rngs, width, kind, chunk
        self.pos = chunk
        self.buf = None

    def _refill(self):
        if self.kind == "uniform":
            draws = [g.random((self.chunk, self.width)) for g in self.rngs]
        else:
            draws = [g.standard_normal((self.chunk, self.width)) for g in self.rngs]
        # (chunk, rows, width) so each step reads one contiguous slab
        self.buf = np.ascontiguousarray(np.stack(draws, axis=1))
        self.pos = 0

    def next(self):
        if self.pos == self.chunk:
            self._refill()
        out = self.buf[self.pos]
        self.pos += 1
        return out


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "none"
    std: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ValueError("noise kind must be 'none' or 'gaussian'")
        if not self.std >= 0 or not math.isfinite(self.std):
            raise ValueError("noise std must be a finite nonnegative number")

    @classmethod
    def from_std(cls, std):
        return cls("gaussian", float(std)) if std > 0 else cls()

    @property
    def active(self):
        return self.kind == "gaussian" and self.std > 0


def checkpoint_schedule(T, per_decade=40):
    """0, then ceil(10^(j/40)) for j = 0, 1, ... up to T, then T."""
    times = {0, int(T)}
    j = 0
    while True:
        t = math.ceil(10 ** (j / per_decade))
        if t > T:
            break
        times.add(t)
        j += 1
    return sorted(times)


@dataclass
class RunConfig:
    game: Game
    algorithms: list
    T: int
    feedback: str = "bandit"
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0
    checkpoints: list = None
    eps: float = 1.0

    def __post_init__(self):
        if isinstance(self.algorithms, str):
            self.algorithms = [self.algorithms] * self.game.num_players
        self.algorithms = list(self.algorithms)
        if len(self.algorithms) != self.game.num_players:
            raise ValueError("need one algorithm per agent")
        for spec in self.algorithms:
            parse_algorithm(spec)
        if int(self.T) != self.T or self.T < 1:
            raise ValueError("horizon T must be a positive integer")
        self.T = int(self.T)
        if self.feedback not in ("bandit", "exact"):
            raise ValueError("feedback must be 'bandit' or 'exact'")
        if self.feedback == "exact":
            if not self.game.exact:
                raise CapabilityError("exact-gradient feedback needs exact expected payoffs")
            if not all(is_full_information(s) for s in self.algorithms):
                raise CapabilityMismatch("exact-gradient feedback needs full-information learners (ew, lgd, fp)")
            if self.game.num_profiles > 10**6:
                raise CapabilityError("game too large for exact expected payoffs")
        else:
            bad = [s for s in self.algorithms if is_full_information(s)]
            if bad:
                raise CapabilityMismatch(f"{bad[0]} needs full payoff vectors; use exact-gradient feedback")
        if self.checkpoints is None:
            self.checkpoints = checkpoint_schedule(self.T)
        else:
            cps = sorted(set(int(t) for t in self.checkpoints) | {self.T})
            if cps[0] < 0 or cps[-1] > self.T:
                raise ValueError("checkpoints must lie in [0, T]")
            self.checkpoints = cps


# ----------------------------------------------------------------------------
# Metrics

def poe(path, profile):
    """Progress of elimination: (1/N) sum_n sum_i p_{n,i} Lambda(n,i) / L0."""
    L0 = path.elimination_length
    if L0 == 0:
        raise ValueError("PoE is undefined when nothing is eliminated (L0 = 0)")
    if len(profile) != len(path.action_counts):
        raise ValueError("profile does not match the elimination path")
    total = 0.0
    for p, d in zip(profile, path.distances):
        total += float(np.asarray(p) @ d)
    return total / (L0 * len(profile))


def essential_elimination_report(profile, eliminated, eps, K, N):
    """Check p_i <= eps / (4 K N) for each eliminated (player, action)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    threshold = eps / (4 * K * N)
    rows = []
    for n, a in sorted(eliminated):
        p = float(profile[n][a])
        rows.append({"player": n, "action": a, "p": p, "pass": p <= threshold})
    ok = all(r["pass"] for r in rows)
    return {
        "threshold": threshold,
        "actions": rows,
        "all_pass": ok,
        # with every eliminated action below threshold the L1 distance to the
        # surviving profile is below eps / 2
        "l1_bound": eps / 2 if ok else None,
    }


class _MetricPlan:
    """Vectorized metric evaluation over a batch of seeds."""

    def __init__(self, path, action_counts):
        self.path = path
        self.L0 = path.elimination_length if path is not None else 0
        if path is not None:
            if tuple(path.action_counts) != tuple(action_counts):
                raise ValueError("elimination path does not match the game")
            self.dist = [d.astype(float) for d in path.distances]
            self.dominated = [d < self.L0 for d in path.distances]
            self.unique = path.dominance_solvable and self.L0 > 0
            self.survivor = [s[0] for s in path.survivors] if self.unique else None

    def compute(self, dists):
        """dists: list over agents of (S, K_n). Returns name -> (S,) arrays."""
        if self.path is None or self.L0 == 0:
            return {}
        N = len(dists)
        S = dists[0].shape[0]
        poe_v = sum(p @ d for p, d in zip(dists, self.dist)) / (self.L0 * N)
        out = {"poe": poe_v}
        if self.unique:
            out["ne_mass"] = sum(p[:, s] for p, s in zip(dists, self.survivor)) / N
        dom = np.zeros(S)
        for p, mask in zip(dists, self.dominated):
            if mask.any():
                dom = np.maximum(dom, p[:, mask].max(axis=1))
        out["max_dom_prob"] = dom
        return out


@dataclass
class Trace:
    """Checkpointed record of one run (one seed)."""

    seed: int
    times: list
    metrics: dict
    dists: list
    meta: dict = field(default_factory=dict)

    def final(self, metric):
        return float(self.metrics[metric][-1])

    def final_profile(self):
        return self.dists[-1]

    def rows(self, dump_dists=False):
        names = [m for m in ("poe", "ne_mass", "max_dom_prob") if m in self.metrics]
        for c, t in enumerate(self.times):
            for m in names:
                yield (t, self.seed, -1, m, self.metrics[m][c])
            if dump_dists:
                for n, p in enumerate(self.dists[c]):
                    for a, v in enumerate(p):
                        yield (t, self.seed, n + 1, f"p_{a + 1}", v)

    def to_csv(self, path, dump_dists=False):
        write_trace_rows(path, self.rows(dump_dists))


def format_value(v):
    return format(float(v), ".17g")


def write_trace_rows(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, seed, agent, metric, value in rows:
            w.writerow([t, seed, agent, metric, format_value(value)])


class TraceFormatError(ValueError):
    pass


def read_trace_csv(path):
    """Parse a trace CSV into {seed: {metric: [(t, value), ...]}} plus
    per-agent distributions {seed: {t: {agent: {action: p}}}}."""
    metrics, dists = {}, {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise TraceFormatError(f"{path}: bad header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise TraceFormatError(f"{path}: row {lineno} has {len(row)} fields")
            try:
                t, seed, agent = int(row[0]), int(row[1]), int(row[2])
                value = float(row[4])
            except ValueError:
                raise TraceFormatError(f"{path}: row {lineno} is malformed: {row!r}") from None
            metric = row[3]
            if metric.startswith("p_"):
                dists.setdefault(seed, {}).setdefault(t, {}).setdefault(agent, {})[int(metric[2:])] = value
            elif agent == -1:
                metrics.setdefault(seed, {}).setdefault(metric, []).append((t, value))
            else:
                raise TraceFormatError(f"{path}: row {lineno} has unknown metric {metric!r}")
    return metrics, dists


# ----------------------------------------------------------------------------
# The self-play loop

def _sample(p, u):
    """Inverse-CDF sampling, one uniform per row."""
    cdf = np.cumsum(p, axis=1)
    a = (cdf < (u * cdf[:, -1])[:, None]).sum(axis=1)
    return np.minimum(a, p.shape[1] - 1)


class _Group:
    """Agents sharing (algorithm, K) driven by one batched learner.

    Row r of the learner belongs to agent ``agents[r // S]`` and seed ``r % S``.
    """

    def __init__(self, spec, K, agents, S, T):
        self.spec, self.K, self.agents, self.S = spec, K, list(agents), S
        self.learner = make_learner(spec, K, batch=len(self.agents) * S, horizon=T)


def _build_groups(config, S):
    keys = {}
    for n, (spec, K) in enumerate(zip(config.algorithms, config.game.action_counts)):
        keys.setdefault((spec, K), []).append(n)
    return [_Group(spec, K, agents, S, config.T) for (spec, K), agents in keys.items()]


def _current_dists(groups, N, S):
    dists = [None] * N
    for g in groups:
        p = g.learner.batch_distribution()
        for j, n in enumerate(g.agents):
            dists[n] = p[j * S:(j + 1) * S]
    return dists


def run_batch(config, seeds, path=None):
    """Run ``config`` once per seed, vectorized across seeds and across
    agents that share an algorithm. Returns one Trace per seed."""
    seeds = [int(s) for s in seeds]
    if not seeds:
        return []
    game = config.game
    N, S, T = game.num_players, len(seeds), config.T
    scale = game.scale if game.scale > 0 else 1.0
    groups = _build_groups(config, S)
    plan = _MetricPlan(path, game.action_counts)
    cps = config.checkpoints
    record_t, record_m, record_d = [], [], []
    next_cp = 0

    def record(t):
        dists = [d.copy() for d in _current_dists(groups, N, S)]
        record_t.append(t)
        record_m.append(plan.compute(dists))
        record_d.append(dists)

    if config.feedback == "bandit":
        # streams: 2n = agent n sampling, 2n + 1 = agent n noise, 2N = environment
        samplers = []
        for g in groups:
            rngs = [stream_rng(seeds[s], 2 * n) for n in g.agents for s in range(S)]
            samplers.append(StreamBuffer(rngs, 1, "uniform"))
        noise = None
        if config.noise.active:
            rngs = [stream_rng(seeds[s], 2 * n + 1) for n in range(N) for s in range(S)]
            noise = StreamBuffer(rngs, 1, "normal")
        env = None
        if game.env_dim:
            env = StreamBuffer([stream_rng(s, 2 * N) for s in seeds], game.env_dim, "normal")
        profiles = np.empty((S, N), dtype=np.int64)
        rows_of = [(np.array(g.agents), len(g.agents)) for g in groups]
        for t in range(T):
            if next_cp < len(cps) and cps[next_cp] == t:
                record(t)
                next_cp += 1
            played = []
            for g, sampler, (agents, m) in zip(groups, samplers, rows_of):
                a = _sample(g.learner.batch_distribution(), sampler.next()[:, 0])
                played.append(a)
                profiles[:, agents] = a.reshape(m, S).T
            shocks = env.next() if env is not None else None
            pay = game.payoffs(profiles, shocks=shocks)
            if noise is not None:
                # noise rows are ordered agent-major: row n * S + s
                pay = pay + config.noise.std * noise.next()[:, 0].reshape(N, S).T
            if not np.all(np.isfinite(pay)):
                raise SimulationError(f"non-finite payoff at round {t}")
            pay = pay / scale
            for g, a, (agents, m) in zip(groups, played, rows_of):
                g.learner.step_bandit(a, pay[:, agents].T.reshape(-1))
    else:
        arrays = [game.payoff_array(n) / scale for n in range(N)]
        for t in range(T):
            if next_cp < len(cps) and cps[next_cp] == t:
                record(t)
                next_cp += 1
            dists = _current_dists(groups, N, S)
            vectors = _exact_vectors(arrays, dists)
            for g in groups:
                g.learner.step_full(np.concatenate([vectors[n] for n in g.agents], axis=0))
    record(T)

    meta = {
        "game": game.to_dict(),
        "algorithms": list(config.algorithms),
        "T": T,
        "feedback": config.feedback,
        "noise": {"kind": config.noise.kind, "std": config.noise.std},
    }
    traces = []
    for s, seed in enumerate(seeds):
        metrics = {k: np.array([m[k][s] for m in record_m]) for k in (record_m[0] if record_m else {})}
        dists = [[d[n][s].copy() for n in range(N)] for d in record_d]
        traces.append(Trace(seed, list(record_t), metrics, dists, dict(meta, seed=seed)))
    return traces


def _exact_vectors(arrays, dists):
    """Expected payoff of every pure action against the others' mixtures,
    batched over seeds: list over agents of (S, K_n)."""
    N = len(arrays)
    if N == 2:
        return [dists[1] @ arrays[0].T, dists[0] @ arrays[1]]
    out = []
    letters = "abcdefghijklmnopqrstuvwxyz"
    for n in range(N):
        axes = letters[:N]
        operands = [arrays[n]]
        subs = [axes]
        for m in range(N):
            if m != n:
                operands.append(dists[m])
                subs.append("Z" + axes[m])
        expr = ",".join(subs) + "->Z" + axes[n]
        out.append(np.einsum(expr, *operands))
    return out


def run_selfplay(config, path=None):
    """One run with master seed ``config.seed``."""
    return run_batch(config, [config.seed], path)[0]
