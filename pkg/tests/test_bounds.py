import numpy as np
import pytest

from beliefstock.assumptions import check_a1, min_delta
from beliefstock.bounds import (bound_chain, delta_gap, delta_pairs, informativeness,
                                lower_bound_tree, lower_bound_vL, models_informativeness,
                                observation_array, shift_model, tighter_lower_sets,
                                tighter_lower_vprime, upper_bound_vU)
from beliefstock.errors import ModelError, ResourceLimitError
from beliefstock.gamma import lattice_probes, solve_finite, value_full
from beliefstock.single_period import myopic_range

from oracles import dp_order_up_to


def test_bounds_coincide_under_attainability(econ3, rng):
    X = rng.dirichlet(np.ones(3), 10)
    low = lower_bound_vL(econ3, 2).value(X)
    up = np.array([upper_bound_vU(econ3, x, -100, 2) for x in X])
    assert np.allclose(low, up)


def test_lower_tree_matches_sets(sec4):
    X = lattice_probes(2, 20)
    G = solve_finite(sec4, 3)
    assert np.allclose(lower_bound_tree(sec4, X, 3), G[3].value(X))
    assert np.allclose(lower_bound_tree(sec4, X, 3, G[:2]), G[3].value(X))


def test_ordering_against_true_optimum(sec4):
    # exhaustive DP over demand-grid order-up-to levels sits between the bounds
    n = 2
    low = lower_bound_vL(sec4, n)
    levels = list(range(10, 22))
    for x in lattice_probes(2, 4):
        for s in (12, 15, 18):
            opt = dp_order_up_to(sec4, x, s, n, levels)
            assert low.value(x) <= opt + 1e-9
            assert opt <= upper_bound_vU(sec4, x, s, n) + 1e-9


def test_upper_depth_guard(sec4):
    with pytest.raises(ResourceLimitError):
        upper_bound_vU(sec4, [1.0, 0.0], 12, 9)


def test_delta_zero_under_attainability(econ3):
    Delta, pairs, cap = delta_pairs(econ3)
    lo, hi = myopic_range(econ3)
    assert cap == hi - econ3.demands[0]
    rep = delta_gap(econ3, 2, probes=np.eye(3))
    assert rep.max_gap_certified <= rep.horizon_bound + 1e-9


def test_gap_report(sec4):
    rep = delta_gap(sec4, 2)
    assert rep.Delta > 0 and rep.pairs
    assert rep.horizon_bound == pytest.approx(rep.Delta * (1 + sec4.beta))
    assert rep.infinite_bound == pytest.approx(rep.Delta / (1 - sec4.beta))
    assert rep.max_gap_certified <= rep.horizon_bound + 1e-9
    assert rep.max_gap >= rep.max_gap_certified
    d = rep.to_dict()
    assert d["argmax"]["s"] == rep.argmax["s"]


def test_shift_model(sec4):
    dm = min_delta(sec4)
    sh = shift_model(sec4, dm)
    assert np.array_equal(sh.demands, sec4.demands + dm)
    assert check_a1(sh).holds
    with pytest.raises(ModelError):
        shift_model(sec4, dm - 1)
    with pytest.raises(ModelError):
        shift_model(sec4, 1.5)
    assert shift_model(sec4, 0, check=False) is sec4


def test_shifted_bound_chain(sec4):
    X = lattice_probes(2, 10)
    S = np.full(len(X), 14.0)
    low, mid, up = bound_chain(sec4, X, S, 2)
    assert np.all(low <= mid + 1e-9) and np.all(mid <= up + 1e-9)
    prep = tighter_lower_sets(sec4, min_delta(sec4) + 2, 2)
    further = tighter_lower_vprime(sec4, min_delta(sec4) + 2, 2, X, S, prepared=prep)
    assert np.all(further <= mid + 1e-9)


def test_observation_array(econ3_aod):
    q, mask = observation_array(econ3_aod)
    assert q.shape == (14, 3, 3)
    assert np.allclose(q.sum(axis=0)[mask], 1.0)


def test_informativeness_garbling():
    rng = np.random.default_rng(3)
    Qp = rng.dirichlet(np.ones(4), (2, 2)).transpose(2, 0, 1)   # (O', i, j)
    R = rng.dirichlet(np.ones(3), 4)                            # O' x O
    Q = np.einsum("pij,po->oij", Qp, R)
    assert informativeness(Q, Qp)
    # a fully informative array is not a garbling of a blind one
    blind = np.full((2, 2, 2), 0.5)
    sharp = np.zeros((2, 2, 2))
    sharp[0, 0, :] = sharp[1, 1, :] = 1.0
    assert informativeness(blind, sharp)
    assert not informativeness(sharp, blind)
    with pytest.raises(ValueError):
        informativeness(blind, np.zeros((2, 3, 3)))


def test_aod_variants(strip_perfect):
    strip, perfect = strip_perfect
    assert models_informativeness(strip, perfect)
    assert not models_informativeness(perfect, strip)
    X = lattice_probes(3, 10)
    for n in (1, 2, 3):
        a = lower_bound_tree(perfect, X, n)
        b = lower_bound_tree(strip, X, n)
        assert np.all(a <= b + 1e-9)


def test_value_full_on_shift(sec4):
    sh, G = tighter_lower_sets(sec4, min_delta(sec4), 2)
    x = np.array([0.5, 0.5])
    assert tighter_lower_vprime(sec4, min_delta(sec4), 2, x, 10, prepared=(sh, G)) == \
        pytest.approx(value_full(sh, G, x, 10))
