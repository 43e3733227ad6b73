import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from domlab.lp import LPError, maximin, solve_packing


def _scipy_maximin(G):
    # max v s.t. G x >= v, sum x = 1, x >= 0
    k, m = G.shape
    c = np.zeros(m + 1)
    c[-1] = -1
    A_ub = np.hstack([-G, np.ones((k, 1))])
    A_eq = np.hstack([np.ones((1, m)), np.zeros((1, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(k), A_eq=A_eq, b_eq=[1],
                  bounds=[(0, None)] * m + [(None, None)], method="highs")
    return -res.fun


def test_maximin_matching_pennies():
    v, x = maximin(np.array([[1.0, -1.0], [-1.0, 1.0]]))
    assert v == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(x, [0.5, 0.5])


def test_maximin_mixed_certificate_example():
    # own strategies are columns: margin of 0.5 e1 + 0.5 e3 over action 2
    rows = np.array([[3, 0], [1, 1], [0, 3]], dtype=float)
    G = (rows[[0, 2]] - rows[1]).T
    v, x = maximin(G)
    assert v == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_maximin_agrees_with_scipy(k, m, seed):
    rng = np.random.default_rng(seed)
    G = rng.uniform(-1, 1, size=(k, m))
    if seed % 3 == 0:
        G = np.round(G * 2) / 2  # degenerate ties
    v, x = maximin(G)
    assert v == pytest.approx(_scipy_maximin(G), abs=1e-9)
    assert np.all(x >= -1e-12) and x.sum() == pytest.approx(1.0)
    assert (G @ x).min() == pytest.approx(v, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_packing_duality(k, m, seed):
    A = np.random.default_rng(seed).uniform(0.1, 2.0, size=(k, m))
    value, w, y = solve_packing(A)
    assert np.all(A @ w <= 1 + 1e-9) and np.all(w >= -1e-12)
    assert np.all(A.T @ y >= 1 - 1e-9) and np.all(y >= -1e-12)
    assert w.sum() == pytest.approx(value) and y.sum() == pytest.approx(value)


def test_packing_rejects_nonpositive():
    with pytest.raises(LPError):
        solve_packing(np.array([[1.0, 0.0]]))
