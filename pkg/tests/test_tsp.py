import itertools
import math

import numpy as np
import pytest

from endgame.parcel import tsp
from endgame.streams import stream


def brute_force_length(points, depot):
    points = np.asarray(points, dtype=float)
    D = tsp._dist_matrix(tsp._coords(points, depot))
    best = math.inf
    for perm in itertools.permutations(range(len(points))):
        best = min(best, tsp.tour_length(D, list(perm)))
    return best


def test_empty_and_singleton():
    order, hours = tsp.tsp_route([], (0, 0), 10.0)
    assert len(order) == 0 and hours == 0.0
    order, hours = tsp.tsp_route([(3.0, 4.0)], (0, 0), 10.0)
    assert list(order) == [0]
    assert hours == pytest.approx(2 * 5.0 / 10.0)  # out and back


def test_unit_square_tour():
    pts = [(0, 0), (1, 0), (1, 1), (0, 1)]
    order, hours = tsp.tsp_route(pts[1:], pts[0], 1.0)
    assert hours == pytest.approx(4.0)
    assert tsp.held_karp_length(pts[1:], pts[0]) == pytest.approx(4.0)


def test_held_karp_matches_brute_force():
    rng = stream(0, "tsp-oracle")
    for n in (2, 4, 6, 7):
        pts = rng.uniform(-5, 5, size=(n, 2))
        depot = rng.uniform(-5, 5, size=2)
        assert tsp.held_karp_length(pts, depot) == \
            pytest.approx(brute_force_length(pts, depot))


def test_heuristic_near_optimal_and_never_below_optimum():
    rng = stream(0, "tsp-quality")
    ratios = []
    for _ in range(20):
        n = int(rng.integers(3, 10))
        pts = rng.uniform(-8, 8, size=(n, 2))
        depot = np.zeros(2)
        order, hours = tsp.tsp_route(pts, depot, 1.0)
        assert sorted(order) == list(range(n))
        opt = tsp.held_karp_length(pts, depot)
        assert hours >= opt - 1e-9
        ratios.append(hours / opt if opt > 0 else 1.0)
    assert max(ratios) < 1.05


def test_insertion_delta_cases():
    depot = np.zeros(2)
    # empty tour: round trip to the new point
    assert tsp.insertion_delta([], depot, (3.0, 4.0)) == pytest.approx(10.0)
    # point on an existing edge costs nothing
    tour = [(2.0, 0.0), (2.0, 2.0)]
    assert tsp.insertion_delta(tour, depot, (1.0, 0.0)) == pytest.approx(0.0)
    # detour: insert (0,2) into depot->(2,0)->depot, cheapest edge split
    d = tsp.insertion_delta([(2.0, 0.0)], depot, (0.0, 2.0))
    assert d == pytest.approx(2 + 2 * math.sqrt(2) - 2)
    assert d >= 0


def test_removal_delta_cases():
    depot = np.zeros(2)
    tour = [(2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]
    # dropping the middle corner of the square saves 2 + 2 - 2*sqrt(2)
    assert tsp.removal_delta(tour, depot, 1) == \
        pytest.approx(4 - 2 * math.sqrt(2))
    # collinear stop saves nothing
    line = [(1.0, 0.0), (2.0, 0.0)]
    assert tsp.removal_delta(line, depot, 0) == pytest.approx(0.0)
    for pos in range(3):
        assert tsp.removal_delta(tour, depot, pos) >= -1e-12


def test_insertion_then_removal_roundtrip_bound():
    # removing a freshly inserted point at its insertion spot recovers
    # at most the insertion cost
    rng = stream(0, "tsp-roundtrip")
    depot = np.zeros(2)
    tour = rng.uniform(-4, 4, size=(5, 2))
    new = rng.uniform(-4, 4, size=2)
    ins = tsp.insertion_delta(tour, depot, new)
    deltas = [tsp.removal_delta(np.vstack([tour[:k], new[None], tour[k:]]),
                                depot, k)
              for k in range(6)]
    assert any(math.isclose(d, ins, rel_tol=1e-9) for d in deltas)
