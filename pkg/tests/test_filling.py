"""Quotient cusped windows, the filling projection, lifts, and checks.

The two standing examples are (F_2, Z*Z) filled along <a^50, b^50> (long:
everything should look like the unfilled pair near the identity) and along
<a^3, b^3> (short: local isometry and injectivity must fail visibly).
"""
import numpy as np
import pytest

from rhfill.errors import InvalidParameterError, WindowError
from rhfill.filling_geometry import (build_quotient_cusped,
                                     check_descent_quasigeodesic,
                                     check_local_isometry, check_uniform_delta,
                                     filling_map_report, injectivity_report,
                                     lift_path, lift_roundtrip_report,
                                     local_isometry_failure_radius,
                                     project_path)
from rhfill.groups import make_filling, standard_f2_pair
from rhfill.cusped import GraphPath, shortest_path


@pytest.fixture(scope="module")
def pair():
    return standard_f2_pair()


@pytest.fixture(scope="module")
def f50(pair):
    return make_filling(pair, {0: [[50]], 1: [[50]]})


@pytest.fixture(scope="module")
def f3(pair):
    return make_filling(pair, {0: [[3]], 1: [[3]]})


@pytest.fixture(scope="module")
def fg50(pair, f50):
    return build_quotient_cusped(pair, f50, radius=4, max_depth=4)


@pytest.fixture(scope="module")
def fg3(pair, f3):
    return build_quotient_cusped(pair, f3, radius=4, max_depth=4)


def test_map_report_clean(fg50):
    rep = filling_map_report(fg50)
    assert rep["pass"]
    assert rep["surjective"]
    assert rep["depth_preserved"]
    assert rep["vertical_loops"] == 0
    assert rep["kind_mismatches"] == 0
    assert rep["lipschitz_on_certified"]
    assert rep["max_stretch"] == 0.0
    # a radius-4 window never sees the length-50 relators: nothing collapses
    assert rep["collapsed_edges"] == 0
    assert len(fg50.source.vertices) == len(fg50.target.vertices) == 441


def test_trivial_filling_is_bijective(pair):
    fg = build_quotient_cusped(pair, make_filling(pair, {}), radius=3, max_depth=3)
    assert filling_map_report(fg)["pass"]
    assert np.array_equal(np.sort(fg.vertex_map),
                          np.arange(len(fg.target.vertices)))


def test_foreign_pair_rejected(f50):
    other = standard_f2_pair()
    with pytest.raises(InvalidParameterError):
        build_quotient_cusped(other, f50, radius=3, max_depth=3)


def test_lift_roundtrip(fg50):
    rep = lift_roundtrip_report(fg50, n_paths=200, seed=3)
    assert rep["pass"]
    assert rep["paths"] == 200
    assert rep["roundtrip_failures"] == 0
    assert rep["tightness_checked"] == 108
    assert rep["tightness_failure_count"] == 0
    assert rep["no_preimage_skipped"] == 0
    # deterministic: same seed, same counts
    assert lift_roundtrip_report(fg50, n_paths=200, seed=3) == rep


def test_lift_base_must_match(fg50):
    tgt = fg50.target
    path = shortest_path(tgt, tgt.vertices[0], tgt.vertices[5])
    # a base vertex projecting elsewhere is refused
    wrong = next(i for i in range(len(fg50.vertex_map))
                 if int(fg50.vertex_map[i]) != path.vertices[0])
    with pytest.raises(InvalidParameterError):
        lift_path(fg50, path, wrong)


def test_project_path_drops_nothing_here(fg50):
    src = fg50.source
    p = shortest_path(src, src.vertices[0], src.vertices[20])
    q = project_path(fg50, p)
    assert q.length == p.length  # no collapsed edges in this window
    q.validate()


def test_local_isometry_long_filling(fg50):
    rep = check_local_isometry(fg50, 2)
    assert rep["pass"]
    assert rep["ball_size"] == 17
    assert rep["pairs_checked"] == 136
    assert rep["image_is_ball"]
    assert rep["violation_count"] == 0


def test_local_isometry_short_filling(fg3):
    rep = check_local_isometry(fg3, 2)
    assert not rep["pass"]
    assert rep["violation_count"] == 50
    assert len(rep["violations"]) == 10  # reported sample is capped
    first = rep["violations"][0]
    # 1 and a^-2 collapse to distance 1 in the Z/3 horoball
    assert first == {"u": "1", "v": "a^-2", "source": 2, "target": 1}
    assert local_isometry_failure_radius(fg3, 4) == 1


def test_local_isometry_radius_gate(fg50):
    with pytest.raises(WindowError):
        check_local_isometry(fg50, 5)


def test_injectivity_reports(f50, f3):
    long = injectivity_report(f50, 3)
    assert long["pass"]
    assert long["ball_size"] == 53
    assert long["collisions"] == 0
    assert all(p["injective"] and p["ball"] == 7 for p in long["peripheral"])
    short = injectivity_report(f3, 3)
    assert not short["pass"]
    assert short["collisions"] == 24
    assert [p["image"] for p in short["peripheral"]] == [3, 3]


def test_descent_quasigeodesic(fg50):
    rep = check_descent_quasigeodesic(fg50, K=1.0, max_depth_used=2,
                                      samples=60, seed=2)
    assert rep["pass"]
    assert rep["paths_checked"] == 60
    assert rep["failure_count"] == 0


def test_uniform_delta(pair, f50, f3):
    rep = check_uniform_delta(pair, {50: f50, 3: f3}, radius=4, slack=2.0)
    assert rep["uniform"]
    assert rep["unfilled_delta"] == 1.5
    assert rep["delta_by_n"] == {3: 1.0, 50: 1.5}
