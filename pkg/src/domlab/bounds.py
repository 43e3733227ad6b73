"""Round-count calculators for Exp3-DH elimination, and a statistical check
of the score-gap concentration bound."""
import math

import numpy as np

from .games import DIRGame
from .learners import Exp3DH


class BoundError(ValueError):
    pass


def _check_common(beta, delta):
    if not beta > 0:
        raise BoundError("beta must be positive")
    if not 0 < delta < 0.5:
        raise BoundError("delta must lie in (0, 1/2)")


def t1_terms(K, N, sigma, beta, b, Delta, eps, delta):
    """Coefficients (A, C, s, R) of the first-threshold condition
    t^-b / K + exp(A t^s - C t) < R."""
    A = 4 * math.sqrt(math.e * K * (1 + sigma ** 2) / (1 + 2 * beta + b)) * math.sqrt(math.log(2 * K / delta))
    C = Delta / (16 * (1 + beta))
    s = (1 + b) / 2
    R = min(eps, Delta / 2) / (4 * K * N)
    return A, C, s, R


def t1_lhs(t, K, N, sigma, beta, b, Delta, eps, delta):
    A, C, s, _ = t1_terms(K, N, sigma, beta, b, Delta, eps, delta)
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore"):
        return t ** (-b) / K + np.exp(A * t ** s - C * t)


def t1_bound(K, N, sigma, beta, b, Delta, eps, delta):
    """Smallest integer T1 with the first-threshold condition holding for
    every t >= T1."""
    if int(K) != K or K < 2 or int(N) != N or N < 1:
        raise BoundError("need integers K >= 2 and N >= 1")
    _check_common(beta, delta)
    if not 0 < b < 1:
        raise BoundError("b must lie in (0, 1)")
    # eps = 1/2 itself is accepted: it is the natural boundary value
    if not 0 < eps <= 0.5:
        raise BoundError("eps must lie in (0, 1/2]")
    if not Delta > 0 or not sigma >= 0:
        raise BoundError("need Delta > 0 and sigma >= 0")
    args = (K, N, sigma, beta, b, Delta, eps, delta)
    A, C, s, R = t1_terms(*args)

    def holds(t):
        return float(t1_lhs(t, *args)) < R

    # the exponent A t^s - C t rises until t_peak and falls afterwards, so
    # the whole left side is decreasing on [t_peak, inf)
    t_peak = (A * s / C) ** (1 / (1 - s))
    lo = max(1, math.ceil(t_peak))
    if not holds(lo):
        hi = lo
        while not holds(hi):
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if holds(mid):
                hi = mid
            else:
                lo = mid
        return hi
    # the condition already holds at the peak; below it the exponential part
    # is at most its peak value, so failures can only occur before t_cap
    g_peak = math.exp(A * t_peak ** s - C * t_peak)
    slack = R - g_peak
    t_cap = min(lo, math.ceil((1 / (K * slack)) ** (1 / b)) + 1)
    block = 1 << 20
    end = t_cap
    while end > 1:
        start = max(1, end - block)
        ts = np.arange(start, end, dtype=float)
        bad = np.flatnonzero(~(t1_lhs(ts, *args) < R))
        if bad.size:
            return int(ts[bad[-1]]) + 1
        end = start
    return 1


def next_t_bound(T_l, Delta, beta, delta):
    """Next threshold from the previous one: the ceiling of
    max((1 + 8/Delta)^(1/(1+beta)) T_l,
        T_l + (1+beta)^2 (4+Delta)^2 (8+Delta)^2 / (4 (1+2beta) Delta^2) ln(1/delta))."""
    if not T_l >= 1:
        raise BoundError("T_l must be at least 1")
    if not Delta > 0:
        raise BoundError("Delta must be positive")
    _check_common(beta, delta)
    grow = (1 + 8 / Delta) ** (1 / (1 + beta)) * T_l
    coef = (1 + beta) ** 2 * (4 + Delta) ** 2 * (8 + Delta) ** 2 / (4 * (1 + 2 * beta) * Delta ** 2)
    add = T_l + coef * math.log(1 / delta)
    return math.ceil(max(grow, add))


def threshold_schedule(T1, L0, Delta, beta, delta):
    """[T_1, ..., T_L0] by iterating next_t_bound."""
    out = [int(T1)]
    for _ in range(int(L0) - 1):
        out.append(next_t_bound(out[-1], Delta, beta, delta))
    return out


def score_gap_bound(T, beta, b, Delta, sigma, delta, K):
    """Right side of the score-gap bound for a dominated action after T rounds:
    Delta sum gamma_t - 4 sqrt(ln(2K/delta)) sqrt(K (1+sigma^2) sum gamma_t^2 / eps_t)
    with gamma_t = (t/T)^beta and eps_t = t^-b, t = 1..T."""
    t = np.arange(1, T + 1, dtype=float)
    gamma = (t / T) ** beta
    spread = math.sqrt(K * (1 + sigma ** 2) * float(np.sum(gamma ** 2 * t ** b)))
    return Delta * float(gamma.sum()) - 4 * math.sqrt(math.log(2 * K / delta)) * spread


def score_gap_check(K=3, c=9, dominated=0, dominator=None, T=2000, beta=2.0, b=0.5,
                           delta=0.05, trials=200, sigma=0.1, opponent=None, seed=0):
    """Fraction of trials in which y_x(T+1) - y_a(T+1) meets the bound.

    Player A of DIR(K, c) runs Exp3-DH for rounds 0..T against an opponent
    drawing i.i.d. from ``opponent`` (uniform by default); payoffs carry
    N(0, sigma^2) observation noise. ``dominator`` is a mixed strategy that
    strictly dominates ``dominated`` (default: the next action up). Returns
    (pass_rate, bound, gaps).
    """
    game = DIRGame(K, c)
    ua = game.payoff_array(0)
    if dominator is None:
        dominator = np.zeros(K)
        dominator[dominated + 1] = 1.0
    dominator = np.asarray(dominator, dtype=float)
    Delta = float((dominator @ ua - ua[dominated]).min())
    if Delta <= 0:
        raise BoundError("the given strategy does not strictly dominate the action")
    opponent = np.full(K, 1.0 / K) if opponent is None else np.asarray(opponent, dtype=float)
    rng = np.random.default_rng(seed)
    learner = Exp3DH(K, b=b, beta=beta, batch=trials)
    rows = np.arange(trials)
    for _ in range(T + 1):
        p = learner.batch_distribution()
        cdf = np.cumsum(p, axis=1)
        a = np.minimum((cdf < rng.random(trials)[:, None] * cdf[:, -1:]).sum(axis=1), K - 1)
        j = rng.choice(K, size=trials, p=opponent)
        r = ua[a, j] + sigma * rng.standard_normal(trials)
        learner.step_bandit(a, r)
    y = learner.y
    gaps = y @ dominator - y[rows, dominated]
    bound = score_gap_bound(T, beta, b, Delta, sigma, delta, K)
    return float(np.mean(gaps >= bound)), bound, gaps


def score_gap_threshold(delta, trials):
    """1 - delta - 3 binomial standard errors."""
    return 1 - delta - 3 * math.sqrt(delta * (1 - delta) / trials)
