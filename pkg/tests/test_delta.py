"""Hyperbolicity estimates on graphs with known answers."""
import numpy as np
import pytest

from rhfill.cusped import build_cayley_ball, cycle_graph
from rhfill.delta import estimate_delta, thin_triangle_delta
from rhfill.errors import DisconnectedError, InvalidParameterError
from rhfill.groups import standard_f2_pair


def quad_defect(D, q):
    # independent four-point evaluation: half the gap between the two
    # largest pair-sum matchings
    i, j, k, l = q
    sums = sorted([D[i, j] + D[k, l], D[i, k] + D[j, l], D[i, l] + D[j, k]])
    return (sums[2] - sums[1]) / 2


def test_cycle_eight_exhaustive():
    c8 = cycle_graph(8)
    est = estimate_delta(c8, mode="exhaustive")
    assert est.delta == 2.0
    assert est.exact
    assert est.mode == "four-point-exhaustive"
    assert est.witness == (0, 2, 4, 6)
    assert quad_defect(c8.distance_matrix(), est.witness) == est.delta


@pytest.mark.parametrize("n,expected", [(4, 1.0), (5, 0.5), (6, 1.0), (7, 1.0),
                                        (8, 2.0), (9, 1.5), (10, 2.0),
                                        (11, 2.0), (12, 3.0)])
def test_cycle_four_point_values(n, expected):
    # n/4 at multiples of four, sagging in between
    est = estimate_delta(cycle_graph(n), mode="exhaustive")
    assert est.delta == expected


def test_tree_is_zero_hyperbolic():
    tree = build_cayley_ball(standard_f2_pair(), 3)
    assert estimate_delta(tree, mode="exhaustive").delta == 0.0
    assert thin_triangle_delta(tree, triangles=200, seed=0).delta == 0.0


def test_sampled_is_a_lower_bound():
    c8 = cycle_graph(8)
    exact = estimate_delta(c8, mode="exhaustive").delta
    for seed in range(4):
        est = estimate_delta(c8, mode="sampled", samples=500, seed=seed)
        assert est.delta <= exact
        assert not est.exact
    # enough samples on 8 vertices find the extremal quadruple
    assert estimate_delta(c8, mode="sampled", samples=2000, seed=1).delta == exact


def test_mode_aliases_and_auto():
    c8 = cycle_graph(8)
    a = estimate_delta(c8, mode="exhaustive")
    b = estimate_delta(c8, mode="four-point-exhaustive")
    assert a.delta == b.delta and a.mode == b.mode
    # small graphs fall under the auto budget and come back exact
    assert estimate_delta(c8, mode="auto").exact


def test_unknown_mode_rejected():
    with pytest.raises(InvalidParameterError):
        estimate_delta(cycle_graph(6), mode="triangle-free")


def test_matrix_input():
    D = cycle_graph(8).distance_matrix()
    assert estimate_delta(D, mode="exhaustive").delta == 2.0
    D2 = np.full((4, 4), np.inf)
    np.fill_diagonal(D2, 0.0)
    with pytest.raises(DisconnectedError):
        estimate_delta(D2, mode="exhaustive")


def test_thin_triangles_on_cycle():
    est = thin_triangle_delta(cycle_graph(8), triangles=200, seed=0)
    assert est.delta == 2.0
    assert est.mode == "thin-triangles"
    assert not est.exact
