"""Sequential decision rules for repeated games.

Every learner keeps a batch of independent states of shape ``(B, K)`` so a
single object can drive many seeds or many identical agents at once. When
constructed without ``batch`` it behaves as a single learner and all inputs
and outputs drop the batch axis.

Rounds are counted from t = 0. ``distribution()`` is the pre-draw strategy
for the current round and ``observe`` consumes that round's feedback.
"""
import math

import numpy as np


class LearnerError(ValueError):
    pass


class CapabilityMismatch(LearnerError):
    """Feedback of the wrong kind was given to a learner."""


class StationaryError(RuntimeError):
    pass


MIRROR_MAPS = ("entropic", "euclidean", "best-response")


def softmax(y):
    z = np.exp(y - y.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def project_simplex(y):
    """Euclidean projection of each row of y onto the probability simplex."""
    y = np.asarray(y, dtype=float)
    K = y.shape[-1]
    u = -np.sort(-y, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    idx = np.arange(1, K + 1)
    cond = u - css / idx > 0
    r = K - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, (r - 1)[..., None], axis=-1) / r[..., None]
    return np.maximum(y - theta, 0.0)


def mirror_map(kind, y):
    """Q(y) = argmax_x <y, x> - h(x) for the three supported regularizers."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise LearnerError("score vector must be finite")
    if kind == "entropic":
        return softmax(y)
    if kind == "euclidean":
        return project_simplex(y)
    if kind == "best-response":
        out = np.zeros_like(y)
        np.put_along_axis(out, np.argmax(y, axis=-1)[..., None], 1.0, axis=-1)
        return out
    raise LearnerError(f"unknown mirror map {kind!r}; choose from {MIRROR_MAPS}")


class Learner:
    feedback = "bandit"
    name = "learner"

    def __init__(self, K, batch=None):
        if int(K) != K or K < 1:
            raise LearnerError("K must be a positive integer")
        self.K = int(K)
        self.single = batch is None
        self.B = 1 if batch is None else int(batch)
        self.t = 0
        self._cache = None

    def params(self):
        return {}

    def spec(self):
        args = ",".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.name}:{args}" if args else self.name

    # -- public interface -----------------------------------------------------
    def distribution(self):
        p = self.batch_distribution()
        return p[0] if self.single else p

    def batch_distribution(self):
        if self._cache is None or self._cache[0] != self.t:
            self._cache = (self.t, self._distribution())
        return self._cache[1]

    def observe(self, played, reward):
        """Bandit feedback: the played action and its (scaled) reward."""
        if self.feedback != "bandit":
            raise CapabilityMismatch(f"{self.name} needs full payoff vectors, not bandit feedback")
        played = np.atleast_1d(np.asarray(played))
        reward = np.atleast_1d(np.asarray(reward, dtype=float))
        if played.shape != (self.B,) or reward.shape != (self.B,):
            raise LearnerError(f"expected {self.B} played actions and rewards")
        if not np.all(np.isfinite(reward)):
            raise LearnerError("reward must be finite")
        if np.any(played < 0) or np.any(played >= self.K) or not np.issubdtype(played.dtype, np.integer):
            raise LearnerError("played action index out of range")
        self.step_bandit(played, reward)

    def observe_vector(self, payoffs):
        """Full-information feedback: the payoff of every action."""
        if self.feedback != "full":
            raise CapabilityMismatch(f"{self.name} uses bandit feedback, not payoff vectors")
        payoffs = np.asarray(payoffs, dtype=float).reshape(self.B, self.K)
        if not np.all(np.isfinite(payoffs)):
            raise LearnerError("payoff vector must be finite")
        self.step_full(payoffs)

    # -- unchecked steps used by the simulator -------------------------------
    def step_bandit(self, played, reward):
        p = self.batch_distribution()
        self._observe(played, reward, p)
        self.t += 1

    def step_full(self, payoffs):
        self._observe_vector(payoffs)
        self.t += 1

    def _estimator(self, played, reward, p):
        """Importance-weighted estimate r / p at the played action, 0 elsewhere."""
        u = np.zeros((self.B, self.K))
        rows = np.arange(self.B)
        u[rows, played] = reward / p[rows, played]
        return u


# ----------------------------------------------------------------------------
# Dual averaging with full-vector feedback

class DualAveraging(Learner):
    """y_1 = 0, p_t = Q(y_t), y_{t+1} = y_t + eta_t u_t with
    eta_t = eta0 * (t + 1)^(-b) for the 0-based round t."""

    feedback = "full"

    def __init__(self, K, mirror="entropic", eta0=1.0, b=0.5, batch=None):
        super().__init__(K, batch)
        if mirror not in MIRROR_MAPS:
            raise LearnerError(f"unknown mirror map {mirror!r}")
        if not eta0 > 0 or not 0 <= b <= 1:
            raise LearnerError("need eta0 > 0 and 0 <= b <= 1 for a non-increasing rate")
        self.mirror, self.eta0, self.b = mirror, float(eta0), float(b)
        self.name = {"entropic": "ew", "euclidean": "lgd", "best-response": "fp"}[mirror]
        self.y = np.zeros((self.B, self.K))

    def params(self):
        return {"eta0": self.eta0, "b": self.b}

    def eta(self, t):
        return self.eta0 * (t + 1) ** (-self.b)

    def _distribution(self):
        return mirror_map(self.mirror, self.y)

    def _observe_vector(self, payoffs):
        self.y += self.eta(self.t) * payoffs


# ----------------------------------------------------------------------------
# Exp3 with diminishing history

def exp3dh_distribution(y, t, b):
    """(1 - eps_t) softmax(y) + eps_t / K with eps_t = t^(-b) and eps_0 = 1."""
    y = np.asarray(y, dtype=float)
    eps = 1.0 if t == 0 else t ** (-b)
    return (1.0 - eps) * softmax(y) + eps / y.shape[-1]


class Exp3DH(Learner):
    """Exp3 with diminishing history.

    Before the round-t estimate is added, every score is discounted by
    ((t-1)/t)^beta (0 at t = 0), so after round t the score equals
    sum_{tau<=t} (tau/t)^beta * u_est(tau): old estimates fade as t grows.
    """

    name = "exp3dh"

    def __init__(self, K, b=0.2, beta=1.0, batch=None):
        super().__init__(K, batch)
        if not 0 < b < 1:
            raise LearnerError("exploration exponent b must lie in (0, 1)")
        if not beta >= 0:
            raise LearnerError("beta must be nonnegative")
        self.b, self.beta = float(b), float(beta)
        self.y = np.zeros((self.B, self.K))

    def params(self):
        return {"b": self.b, "beta": self.beta}

    def _distribution(self):
        return exp3dh_distribution(self.y, self.t, self.b)

    def _observe(self, played, reward, p):
        t = self.t
        self.y *= ((t - 1) / t) ** self.beta if t > 0 else 0.0
        rows = np.arange(self.B)
        self.y[rows, played] += reward / p[rows, played]


# ----------------------------------------------------------------------------
# Exp3 family baselines

class Exp3(Learner):
    """Anytime Exp3: eta_t = sqrt(ln K / (K t)), gamma_t = min(1, sqrt(K ln K / t))
    with t counted from 1, mixing exp(eta_t * S) with uniform exploration."""

    name = "exp3"

    def __init__(self, K, batch=None):
        super().__init__(K, batch)
        self.S = np.zeros((self.B, self.K))

    def rates(self, t):
        n = t + 1
        logk = math.log(self.K) if self.K > 1 else 0.0
        eta = math.sqrt(logk / (self.K * n))
        gamma = min(1.0, math.sqrt(self.K * logk / n))
        return eta, gamma

    def _scores(self):
        return self.S

    def _distribution(self):
        eta, gamma = self.rates(self.t)
        return (1.0 - gamma) * softmax(eta * self._scores()) + gamma / self.K

    def _observe(self, played, reward, p):
        self.S += self._estimator(played, reward, p)


class Exp3RVU(Exp3):
    """Exp3 with recency bias: the distribution uses S + (last estimate), so
    the most recent observation is counted twice."""

    name = "exp3rvu"

    def __init__(self, K, batch=None):
        super().__init__(K, batch)
        self.last = np.zeros((self.B, self.K))

    def _scores(self):
        return self.S + self.last

    def _observe(self, played, reward, p):
        self.last = self._estimator(played, reward, p)
        self.S += self.last


class Exp3P(Learner):
    """Exp3.P for a known horizon T and confidence delta.

    Rewards in [-1, 1] are mapped to gains (r + 1) / 2 in [0, 1]. The gain
    estimate of action i is (g 1[i played] + alpha) / p_i with
    alpha = sqrt(ln(K/delta)/(T K)), eta = 0.95 sqrt(ln K/(T K)) and
    gamma = min(1, 1.05 sqrt(K ln K / T)).
    """

    name = "exp3p"

    def __init__(self, K, T, delta=0.01, batch=None):
        super().__init__(K, batch)
        if T is None:
            raise LearnerError("exp3p needs the horizon T")
        if int(T) != T or T < 1:
            raise LearnerError("horizon T must be a positive integer")
        if not 0 < delta < 1:
            raise LearnerError("delta must lie in (0, 1)")
        self.T, self.delta = int(T), float(delta)
        logk = math.log(self.K) if self.K > 1 else 0.0
        self.alpha = math.sqrt(math.log(self.K / self.delta) / (self.T * self.K))
        self.eta = 0.95 * math.sqrt(logk / (self.T * self.K))
        self.gamma = min(1.0, 1.05 * math.sqrt(self.K * logk / self.T))
        self.G = np.zeros((self.B, self.K))

    def params(self):
        return {"T": self.T, "delta": self.delta}

    def _distribution(self):
        return (1.0 - self.gamma) * softmax(self.eta * self.G) + self.gamma / self.K

    def _observe(self, played, reward, p):
        self._update_gain(played, 0.5 * (reward + 1.0), p)

    def _update_gain(self, played, gain, p):
        est = np.full((self.B, self.K), self.alpha)
        rows = np.arange(self.B)
        est[rows, played] += gain
        self.G += est / p


def stationary_distribution(M, p0=None, tol=1e-12, max_iter=10_000, noise=1e-6):
    """Stationary row vector p = p M of row-stochastic matrices.

    ``M`` has shape (K, K) or (B, K, K). Power iteration starts from ``p0``
    (uniform by default) and stops once the L1 change is at most ``tol``.
    Rows that fail to converge are retried once on M mixed with ``noise``
    uniform mass.
    """
    M = np.asarray(M, dtype=float)
    single = M.ndim == 2
    M = M[None] if single else M
    B, K, _ = M.shape
    p = np.full((B, K), 1.0 / K) if p0 is None else np.array(p0, dtype=float).reshape(B, K)
    p, done = _power_iterate(M, p, tol, max_iter)
    if not done.all():
        bad = ~done
        mixed = (1.0 - noise) * M[bad] + noise / K
        q, ok = _power_iterate(mixed, np.full((int(bad.sum()), K), 1.0 / K), tol, max_iter)
        if not ok.all():
            raise StationaryError("power iteration did not converge")
        p[bad] = q
    return p[0] if single else p


def _power_iterate(M, p, tol, max_iter):
    done = np.zeros(len(p), dtype=bool)
    active = np.arange(len(p))
    for _ in range(max_iter):
        nxt = np.einsum("bi,bij->bj", p[active], M[active])
        nxt /= nxt.sum(axis=1, keepdims=True)
        change = np.abs(nxt - p[active]).sum(axis=1)
        p[active] = nxt
        finished = change <= tol
        done[active[finished]] = True
        active = active[~finished]
        if active.size == 0:
            break
    return p, done


class Exp3PSwap(Learner):
    """Swap-regret Exp3.P: K base Exp3.P learners form the rows of a
    row-stochastic matrix M and the master plays its stationary distribution.
    Base i is credited with the share p_i of the observed gain.

    Power iteration is warm-started from the previous round's distribution.
    """

    name = "exp3pswap"

    def __init__(self, K, T, delta=0.01, batch=None):
        super().__init__(K, batch)
        self.base = Exp3P(K, T, delta, batch=self.B * self.K)
        self.T, self.delta = self.base.T, self.base.delta
        self._p = np.full((self.B, self.K), 1.0 / self.K)

    def params(self):
        return {"T": self.T, "delta": self.delta}

    def matrix(self):
        return self.base.batch_distribution().reshape(self.B, self.K, self.K)

    def _distribution(self):
        p = stationary_distribution(self.matrix(), p0=self._p)
        self._p = p
        return p

    def _observe(self, played, reward, p):
        q = self.base.batch_distribution()
        gain = (p * (0.5 * (reward + 1.0))[:, None]).reshape(-1)
        self.base._update_gain(np.repeat(played, self.K), gain, q)
        self.base.t += 1


# ----------------------------------------------------------------------------
# Online mirror descent with a log-barrier regularizer

def log_barrier_step(x, eta, u, max_iter=100):
    """Solve 1/x'_i = 1/x_i - eta_i (u_i - lam) with sum x' = 1, row-wise.

    f(lam) = sum_i 1/(a_i + eta_i lam) - 1 with a = 1/x - eta u is convex and
    decreasing, so Newton steps from a point left of the root climb to it.
    """
    a = 1.0 / x - eta * u
    ratio = -a / eta
    j = np.argmax(ratio, axis=-1)
    rows = np.arange(len(a))
    lam = (1.0 - a[rows, j]) / eta[rows, j]
    for _ in range(max_iter):
        d = a + eta * lam[:, None]
        inv = 1.0 / d
        f = inv.sum(axis=1) - 1.0
        if np.all(np.abs(f) <= 1e-13):
            break
        fp = -(eta * inv * inv).sum(axis=1)
        lam = lam - f / fp
    else:
        raise LearnerError("log-barrier normalization did not converge")
    xn = 1.0 / (a + eta * lam[:, None])
    if np.any(xn <= 0):
        raise LearnerError("log-barrier step left the simplex interior")
    return xn / xn.sum(axis=1, keepdims=True)


class OMDLB(Learner):
    """Bandit OMD with the log barrier sum_i -log(x_i)/eta_i and per-action
    rate increases: whenever 1/x_i exceeds its threshold rho_i the
    threshold becomes 2/x_i and eta_i grows by kappa = exp(1/ln T)."""

    name = "omdlb"

    def __init__(self, K, T, eta=None, kappa=None, batch=None):
        super().__init__(K, batch)
        if T is None:
            raise LearnerError("omdlb needs the horizon T")
        if int(T) != T or T < 2:
            raise LearnerError("horizon T must be an integer >= 2")
        self.T = int(T)
        logt = math.log(self.T)
        self.eta0 = math.sqrt(logt / (self.K * self.T)) if eta is None else float(eta)
        self.kappa = math.exp(1.0 / logt) if kappa is None else float(kappa)
        if not self.eta0 > 0 or not self.kappa >= 1:
            raise LearnerError("need eta > 0 and kappa >= 1")
        self.x = np.full((self.B, self.K), 1.0 / self.K)
        self.eta = np.full((self.B, self.K), self.eta0)
        self.rho = np.full((self.B, self.K), 2.0 * self.K)

    def params(self):
        return {"T": self.T}

    def _distribution(self):
        return self.x

    def _observe(self, played, reward, p):
        u = self._estimator(played, reward, p)
        self.x = log_barrier_step(self.x, self.eta, u)
        inv = 1.0 / self.x
        grow = inv > self.rho
        if grow.any():
            self.rho = np.where(grow, 2.0 * inv, self.rho)
            self.eta = np.where(grow, self.eta * self.kappa, self.eta)


# ----------------------------------------------------------------------------
# Algorithm spec strings

_ALGORITHMS = {
    "exp3dh": ({"b", "beta"}, set()),
    "exp3": (set(), set()),
    "exp3rvu": (set(), set()),
    "exp3p": ({"T", "delta"}, {"T"}),
    "exp3pswap": ({"T", "delta"}, {"T"}),
    "omdlb": ({"T", "eta", "kappa"}, {"T"}),
    "ew": ({"eta0", "b"}, set()),
    "lgd": ({"eta0", "b"}, set()),
    "fp": ({"eta0", "b"}, set()),
}

_DA_MIRROR = {"ew": "entropic", "lgd": "euclidean", "fp": "best-response"}


def parse_algorithm(text):
    """Parse ``name[:key=value,...]`` into (name, params)."""
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    if name not in _ALGORITHMS:
        raise LearnerError(f"unknown algorithm {name!r}; choose from {sorted(_ALGORITHMS)}")
    allowed, _ = _ALGORITHMS[name]
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        key = key.strip()
        if not eq or key not in allowed:
            raise LearnerError(f"{name} does not accept {item!r}; allowed keys: {sorted(allowed)}")
        try:
            params[key] = int(value) if key == "T" else float(value)
        except ValueError:
            raise LearnerError(f"bad value in {item!r}") from None
    return name, params


def is_full_information(text):
    return parse_algorithm(text)[0] in _DA_MIRROR


def make_learner(text, K, batch=None, horizon=None):
    """Build a learner from a spec string. ``horizon`` fills in T for
    horizon-aware algorithms when the string does not set it."""
    name, params = parse_algorithm(text)
    if "T" in _ALGORITHMS[name][1] and "T" not in params:
        if horizon is None:
            raise LearnerError(f"{name} needs a declared horizon T")
        params["T"] = int(horizon)
    if name == "exp3dh":
        return Exp3DH(K, batch=batch, **params)
    if name == "exp3":
        return Exp3(K, batch=batch)
    if name == "exp3rvu":
        return Exp3RVU(K, batch=batch)
    if name == "exp3p":
        return Exp3P(K, batch=batch, **params)
    if name == "exp3pswap":
        return Exp3PSwap(K, batch=batch, **params)
    if name == "omdlb":
        return OMDLB(K, batch=batch, **params)
    defaults = {"eta0": 1.0, "b": 0.5}
    defaults.update(params)
    return DualAveraging(K, mirror=_DA_MIRROR[name], batch=batch, **defaults)
