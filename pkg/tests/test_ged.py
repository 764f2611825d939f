import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graphs, random_pairs
from graphsim.errors import BudgetExceeded, TooLarge
from graphsim.ged import (
    astar_ged,
    beam_ged,
    brute_force_ged,
    edit_path_cost,
    ged_to_similarity,
    normalized_ged,
    similarity_to_ged,
)
from graphsim.graph import Graph

P3 = Graph.unlabeled("p3", 3, [(0, 1), (1, 2)])
C3 = Graph.unlabeled("c3", 3, [(0, 1), (1, 2), (0, 2)])


def test_edit_path_cost_by_hand():
    g1 = Graph.build("a", ["C", "N"], [(0, 1)])
    g2 = Graph.build("b", ["C", "O", "C"], [(0, 2)])
    # C->C, N->O, insert node 2, delete edge (0,1), insert edge (0,2)
    assert edit_path_cost(g1, g2, [0, 1]) == 1 + 1 + 1 + 1
    # delete everything, insert everything
    assert edit_path_cost(g1, g2, [None, None]) == 2 + 1 + 3 + 1


def test_edit_path_cost_rejects_bad_mappings():
    with pytest.raises(ValueError):
        edit_path_cost(P3, C3, [0, 0, 1])
    with pytest.raises(ValueError):
        edit_path_cost(P3, C3, [0, 1])


def test_brute_force_examples():
    assert brute_force_ged(Graph.build("a", ["C"]), Graph.build("b", ["N"])) == 1
    assert brute_force_ged(P3, C3) == 1
    g = Graph.build("g", ["A", "B", "A", "C"], [(0, 1), (1, 2), (2, 3)])
    assert brute_force_ged(g, g) == 0


def test_brute_force_hand_enumeration_p3_c3():
    # every bijection P3 -> C3 keeps both path edges and misses one triangle edge
    import itertools

    costs = [edit_path_cost(P3, C3, list(p)) for p in itertools.permutations(range(3))]
    assert min(costs) == 1 and set(costs) == {1}


def test_brute_force_size_limit():
    big = Graph.unlabeled("big", 8)
    with pytest.raises(TooLarge):
        brute_force_ged(big, P3)


def test_astar_examples():
    assert astar_ged(P3, P3) == 0
    two = Graph.unlabeled("e", 2)
    k2 = Graph.unlabeled("k", 2, [(0, 1)])
    assert astar_ged(two, k2) == 1
    assert astar_ged(P3, C3) == 1


def test_astar_matches_brute_force_6_nodes():
    for g1, g2 in random_pairs(120, 6, seed=11):
        assert astar_ged(g1, g2) == brute_force_ged(g1, g2), (g1, g2)


def test_astar_against_sizes_and_unlabeled():
    for g1, g2 in random_pairs(40, 6, seed=12, labels=("",)):
        assert astar_ged(g1, g2) == brute_force_ged(g1, g2)


def test_astar_budget():
    g1, g2 = random_pairs(1, 10, seed=1, min_nodes=10)[0]
    with pytest.raises(BudgetExceeded):
        astar_ged(g1, g2, max_expansions=1)


@settings(max_examples=60, deadline=None)
@given(graphs(max_nodes=5, gid="a"), graphs(max_nodes=5, gid="b"))
def test_ged_symmetric_and_bounded(g1, g2):
    exact = astar_ged(g1, g2)
    assert exact == astar_ged(g2, g1) == brute_force_ged(g1, g2)
    for w in (1, 2, 3):
        b = beam_ged(g1, g2, w)
        assert b == beam_ged(g2, g1, w)
        assert b >= exact
    # trivial upper bound: delete all of g1, insert all of g2
    assert exact <= g1.n + g1.num_edges + g2.n + g2.num_edges
    assert exact >= abs(g1.n - g2.n)


@settings(max_examples=40, deadline=None)
@given(graphs(max_nodes=4, gid="a"), graphs(max_nodes=4, gid="b"), graphs(max_nodes=4, gid="c"))
def test_triangle_inequality(a, b, c):
    assert astar_ged(a, c) <= astar_ged(a, b) + astar_ged(b, c)


def test_beam_identical_width_one():
    for g, _ in random_pairs(20, 8, seed=3):
        assert beam_ged(g, g, 1) == 0


def test_beam_unbounded_is_exact():
    for g1, g2 in random_pairs(40, 6, seed=4):
        assert beam_ged(g1, g2, None) == beam_ged(g1, g2, math.inf) == brute_force_ged(g1, g2)


def test_beam_width_upper_bounds():
    for g1, g2 in random_pairs(60, 6, seed=5):
        exact = brute_force_ged(g1, g2)
        assert beam_ged(g1, g2, 3) >= exact


def test_beam_huge_width_is_exact():
    # a beam wider than the whole search tree never prunes
    for g1, g2 in random_pairs(20, 4, seed=6):
        assert beam_ged(g1, g2, 10**6) == astar_ged(g1, g2)


def test_beam_rejects_bad_width():
    with pytest.raises(ValueError):
        beam_ged(P3, C3, 0)


def test_similarity_examples():
    assert ged_to_similarity(0, 3, 5) == 1.0
    assert ged_to_similarity(2, 4, 4) == pytest.approx(0.60653, abs=1e-5)
    assert normalized_ged(3, 2, 4) == 1.0


@given(st.integers(0, 60), st.integers(1, 30), st.integers(1, 30))
def test_similarity_round_trip(ged, n1, n2):
    sim = ged_to_similarity(ged, n1, n2)
    assert 0 < sim <= 1
    assert similarity_to_ged(sim, n1, n2) == pytest.approx(ged, abs=1e-12 * max(1, ged))


def test_similarity_monotone_on_grid():
    for n1, n2 in [(1, 1), (3, 8), (10, 10)]:
        sims = [ged_to_similarity(g, n1, n2) for g in np.linspace(0, 40, 401)]
        assert all(a > b for a, b in zip(sims, sims[1:]))


def test_similarity_rejects_bad_input():
    with pytest.raises(ValueError):
        ged_to_similarity(-1, 2, 2)
    with pytest.raises(ValueError):
        ged_to_similarity(1, 0, 2)
    with pytest.raises(ValueError):
        similarity_to_ged(0.0, 2, 2)
