import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import kendalltau

from graphsim.errors import DegenerateInput, Empty, KTooLarge, LengthMismatch
from graphsim.metrics import kendall_tau, mse_metric, precision_at_k, rank_order


def test_mse_examples():
    assert mse_metric([0.1, 0.2], [0.1, 0.2]) == 0
    assert mse_metric([0, 0], [1, 1]) == 1.0


def test_mse_two_pass_reference():
    pred, truth = [0.3, 0.9, 0.1, 0.5], [0.25, 0.5, 0.0, 0.75]
    total = 0.0
    for p, t in zip(pred, truth):
        total += (p - t) ** 2
    assert mse_metric(pred, truth) == pytest.approx(total / len(pred))


def test_mse_errors():
    with pytest.raises(LengthMismatch):
        mse_metric([1], [1, 2])
    with pytest.raises(Empty):
        mse_metric([], [])


def tau_b_quadratic(x, y):
    conc = disc = tx = ty = 0
    for i, j in itertools.combinations(range(len(x)), 2):
        dx, dy = x[i] - x[j], y[i] - y[j]
        if dx == 0 and dy == 0:
            continue
        if dx == 0:
            tx += 1
        elif dy == 0:
            ty += 1
        elif dx * dy > 0:
            conc += 1
        else:
            disc += 1
    return (conc - disc) / np.sqrt((conc + disc + tx) * (conc + disc + ty))


def test_tau_examples():
    assert kendall_tau([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0
    assert kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0


def test_tau_with_ties_matches_quadratic_oracle():
    x = [1, 2, 2, 3, 3, 3, 5]
    y = [2, 1, 2, 2, 4, 4, 3]
    assert kendall_tau(x, y) == pytest.approx(tau_b_quadratic(x, y))


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=2, max_size=30))
def test_tau_property_vs_oracles(pairs):
    x, y = [p[0] for p in pairs], [p[1] for p in pairs]
    if len(set(x)) == 1 or len(set(y)) == 1:
        with pytest.raises(DegenerateInput):
            kendall_tau(x, y)
        return
    tau = kendall_tau(x, y)
    assert -1 <= tau <= 1
    assert tau == pytest.approx(tau_b_quadratic(x, y), abs=1e-12)
    assert tau == pytest.approx(kendalltau(x, y).statistic, abs=1e-12)


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=20, unique=True))
def test_tau_self_and_reverse(x):
    assert kendall_tau(x, x) == 1.0
    assert kendall_tau(x, [-v for v in x]) == -1.0


def test_tau_degenerate():
    with pytest.raises(DegenerateInput):
        kendall_tau([0.5, 0.5, 0.5], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        kendall_tau([1], [1])


def test_rank_order_tie_break():
    assert rank_order([0.5, 0.9, 0.5, 0.1], ["d", "a", "b", "c"]) == [1, 2, 0, 3]


def test_precision_examples():
    truth = [0.9, 0.8, 0.7, 0.6, 0.5]
    for k in range(1, 6):
        assert precision_at_k(truth, truth, k) == 1.0
    assert precision_at_k([0, 0, 1, 1], [1, 1, 0, 0], 2) == 0.0


def test_precision_ties_at_boundary():
    # hand enumeration with ids a..f; ties broken by ascending id
    ids = ["a", "b", "c", "d", "e", "f"]
    pred = [0.9, 0.5, 0.5, 0.5, 0.1, 0.7]
    truth = [0.8, 0.2, 0.6, 0.6, 0.6, 0.9]
    # pred top-3: a(0.9), f(0.7), b(0.5 wins the tie by id)
    # true top-3: f(0.9), a(0.8), c(0.6 wins the tie by id)
    assert precision_at_k(pred, truth, 3, ids) == pytest.approx(2 / 3)
    # k=4 adds c (pred) and d (true): overlap {a, f, c}
    assert precision_at_k(pred, truth, 4, ids) == pytest.approx(3 / 4)


def test_precision_full_list_is_one():
    rng = np.random.default_rng(0)
    p, t = rng.random(12), rng.random(12)
    assert precision_at_k(p, t, 12) == 1.0


def test_precision_errors():
    with pytest.raises(KTooLarge):
        precision_at_k([1, 2], [1, 2], 3)
    with pytest.raises(ValueError):
        precision_at_k([1, 2], [1, 2], 0)
