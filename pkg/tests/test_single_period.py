import numpy as np
import pytest

from beliefstock.regions import polygon_area, polygon_vertices
from beliefstock.single_period import (cost_vector, expected_cost_L, expected_cost_batch,
                                       facet_coefficients, max_myopic_cost, myopic_base_stock,
                                       myopic_index, myopic_range, p1_region, partition_p1,
                                       period_cost)
from beliefstock.assumptions import check_a3, dominated_by

from oracles import direct_cost, myopic_level, random_model


def test_period_cost():
    assert period_cost(3, 5, 4.0, 1.0) == pytest.approx(8.0)
    assert period_cost(7, 5, 4.0, 1.0) == pytest.approx(2.0)
    assert period_cost(5, 5, 4.0, 1.0) == 0.0


def test_facets_match_direct_cost(econ3, rng):
    for x in rng.dirichlet(np.ones(3), 10):
        for y in [0, 17, 20, 22.5, 30, 40]:
            assert expected_cost_L(econ3, x, y) == pytest.approx(direct_cost(econ3, x, y), abs=1e-10)
            assert x @ cost_vector(econ3, y) == pytest.approx(direct_cost(econ3, x, y), abs=1e-10)


def test_facet_slopes(econ3, rng):
    x = rng.dirichlet(np.ones(3))
    F = facet_coefficients(econ3, x)
    assert F.A[0] == -econ3.p and F.A[-1] == econ3.h
    assert np.all(np.diff(F.A) >= -1e-12)
    # neighbouring facets meet at the demand points
    d = econ3.demands.astype(float)
    assert np.allclose(F.A[:-1] * d + F.B[:-1], F.A[1:] * d + F.B[1:])


def test_cost_convex_in_y(econ3, rng):
    ys = np.arange(10, 45)
    L = expected_cost_batch(econ3, rng.dirichlet(np.ones(3), 5), ys)
    assert np.all(np.diff(L, 2, axis=1) >= -1e-9)


def test_myopic_level_minimizes(econ3, rng):
    X = rng.dirichlet(np.ones(3), 200)
    s = myopic_base_stock(econ3, X)
    L = expected_cost_batch(econ3, X, econ3.demands)
    best = L.min(axis=1)
    assert np.allclose(L[np.arange(200), np.searchsorted(econ3.demands, s)], best)


def test_example1_levels(econ3):
    assert myopic_base_stock(econ3, [1, 0, 0]) == 20
    assert myopic_base_stock(econ3, [0, 0, 1]) == 35
    assert myopic_range(econ3) == (20, 35)


def test_partition_four_regions(econ3):
    regs = partition_p1(econ3)
    assert sorted(r.label for r in regs) == [20, 25, 30, 35]
    areas = [polygon_area(polygon_vertices(r)) for r in regs]
    assert sum(areas) == pytest.approx(polygon_area(np.eye(3)), rel=1e-9)


def test_partition_agrees_with_scan(econ3, rng):
    X = rng.dirichlet(np.ones(3), 10_000)
    regs = partition_p1(econ3)
    lab = np.full(len(X), -1)
    for r in regs:
        inside = r.contains(X)
        assert not np.any(inside & (lab >= 0))
        lab[inside] = r.label
    assert np.array_equal(lab, myopic_base_stock(econ3, X))


def test_scan_matches_oracle_on_random_models(rng):
    for _ in range(10):
        m = random_model(rng, N=3, M=4, Z=2)
        for x in rng.dirichlet(np.ones(3), 30):
            assert myopic_base_stock(m, x) == myopic_level(m, x)


def test_boundary_belongs_to_lower_level(econ3):
    # on the weak row C[m] x = cr the level is d_m, not d_{m+1}
    from beliefstock.single_period import cumulative_rows
    C = cumulative_rows(econ3)[4]
    cr = econ3.costs.critical_ratio
    a, b = np.eye(3)[0], np.eye(3)[2]
    t = (C @ a - cr) / (C @ a - C @ b)
    x = (1 - t) * a + t * b
    assert C @ x == pytest.approx(cr, abs=1e-12)
    x_on = x if C @ x >= cr else x + 1e-13 * (a - b)
    assert myopic_base_stock(econ3, x_on) == 25
    assert p1_region(econ3, 4).contains(x_on)
    assert not p1_region(econ3, 5).contains(x_on)


def test_monotone_under_dominance(econ3, rng):
    assert check_a3(econ3)
    for _ in range(200):
        x, xp = rng.dirichlet(np.ones(3), 2)
        if dominated_by(x, xp):
            assert myopic_base_stock(econ3, x) <= myopic_base_stock(econ3, xp)
    # vertices are totally ordered
    lv = myopic_base_stock(econ3, np.eye(3))
    assert list(lv) == sorted(lv)


def test_max_myopic_cost(econ3, rng):
    X = rng.dirichlet(np.ones(3), 2000)
    vals = expected_cost_batch(econ3, X, econ3.demands).min(axis=1)
    assert max_myopic_cost(econ3) >= vals.max() - 1e-9
    assert max_myopic_cost(econ3) <= vals.max() * 1.05


def test_index_scalar_and_batch(econ3):
    assert isinstance(myopic_index(econ3, [0.2, 0.3, 0.5]), int)
    assert myopic_index(econ3, np.eye(3)).shape == (3,)
