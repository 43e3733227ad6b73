"""Small dense simplex solver.

Only one LP shape is needed by the package: the value of a finite zero-sum
game, max_x min_r (G x)_r over the simplex. After shifting G to be positive
it becomes the packing problem max 1'w s.t. A w <= 1, w >= 0, whose slack
basis is feasible, so a single phase suffices. Bland's rule keeps the
pivoting finite on degenerate instances.
"""
import numpy as np

PIVOT_TOL = 1e-12


class LPError(RuntimeError):
    pass


def solve_packing(A, max_pivots=None):
    """Solve max 1'w s.t. A w <= 1, w >= 0 for a positive k x m matrix A.

    Returns ``(value, w, y)`` where y is the optimal solution of the dual
    covering problem min 1'y s.t. A'y >= 1, y >= 0.
    """
    A = np.asarray(A, dtype=float)
    k, m = A.shape
    if np.any(A <= 0):
        raise LPError("packing matrix must be strictly positive")
    # columns: w_0..w_{m-1}, slack_0..slack_{k-1}, rhs
    tab = np.zeros((k + 1, m + k + 1))
    tab[:k, :m] = A
    tab[:k, m:m + k] = np.eye(k)
    tab[:k, -1] = 1.0
    tab[k, :m] = -1.0
    basis = list(range(m, m + k))
    limit = max_pivots or 50 * (m + k) + 1000
    for _ in range(limit):
        row0 = tab[k, :-1]
        candidates = np.flatnonzero(row0 < -PIVOT_TOL)
        if candidates.size == 0:
            break
        col = candidates[0]
        column = tab[:k, col]
        positive = np.flatnonzero(column > PIVOT_TOL)
        if positive.size == 0:
            raise LPError("packing LP is unbounded")
        ratios = tab[positive, -1] / column[positive]
        best = ratios.min()
        tied = positive[ratios <= best + PIVOT_TOL * max(1.0, best)]
        row = min(tied, key=lambda r: basis[r])
        tab[row] /= tab[row, col]
        others = np.arange(k + 1) != row
        tab[others] -= np.outer(tab[others, col], tab[row])
        basis[row] = col
    else:
        raise LPError("simplex did not terminate")
    w = np.zeros(m)
    for r, var in enumerate(basis):
        if var < m:
            w[var] = tab[r, -1]
    y = tab[k, m:m + k].copy()
    return float(tab[k, -1]), w, y


def maximin(G):
    """Value and optimal mixture of max_x min_r (G x)_r, x on the simplex.

    ``G`` has one row per opponent response r and one column per pure
    strategy of the maximizing player.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.size == 0:
        raise LPError("maximin needs a nonempty 2-d matrix")
    shift = 1.0 - G.min()
    _, _, z = solve_packing((G + shift).T)
    # z solves min 1'z s.t. (G + shift) z >= 1; the game value is 1/1'z
    total = z.sum()
    x = z / total
    x[x < 0] = 0.0
    x /= x.sum()
    v = float(np.min(G @ x))
    return v, x
