import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beliefstock.belief import (check_belief, lambda_update, outcome_probs, parse_belief,
                                posteriors, reachable_beliefs, sigma, sigma_marginal, unit_belief)
from beliefstock.errors import BeliefError, ImpossibleObservation
from beliefstock.model import CostParams, ModelSpec, build_factored

from oracles import random_model

e3 = np.array([0.0, 0.0, 1.0])


def test_sigma_example1(econ3):
    assert sigma(econ3, 0, 0, e3) == pytest.approx(0.0325, abs=5e-4)
    # hand sum: row 3 of P against column d_1 of QD
    assert sigma(econ3, 0, 0, e3) == pytest.approx(
        0.4467 * 0.0207 + 0.0313 * 0.2697 + 0.5220 * 0.0283, abs=1e-4)


def test_sigma_total_probability(econ3_aod, rng):
    for x in rng.dirichlet(np.ones(3), 20):
        assert outcome_probs(econ3_aod, x).sum() == pytest.approx(1.0, abs=1e-12)
        assert sum(sigma_marginal(econ3_aod, k, x) for k in range(7)) == pytest.approx(1.0)


def test_deterministic_demand_sigma():
    J = build_factored([[0.5, 0.5], [0.2, 0.8]], [[0, 1, 0], [0, 1, 0]])
    m = ModelSpec([1, 2, 3], J, CostParams(1, 1))
    assert sigma(m, 1, 0, [0.3, 0.7]) == pytest.approx(1.0)


@pytest.mark.parametrize("model_name,z,expected", [
    ("econ3", 0, [0.28, 0.26, 0.46]),
    ("econ3_aod", 0, [0.61, 0.39, 0.0]),
    ("econ3_aod", 1, [0.0, 0.15, 0.85]),
])
def test_example1_posteriors(model_name, z, expected, request):
    m = request.getfixturevalue(model_name)
    assert np.allclose(lambda_update(m, 0, z, e3), expected, atol=5e-3)


def test_impossible_outcome_raises():
    # demand 1 never happens in state 1
    J = build_factored(np.eye(2), [[0.0, 1.0], [0.5, 0.5]])
    m = ModelSpec([1, 2], J, CostParams(1, 1))
    with pytest.raises(ImpossibleObservation):
        lambda_update(m, 0, 0, [1.0, 0.0])
    assert np.allclose(lambda_update(m, 0, 0, [0.5, 0.5]), [0.0, 1.0])


def test_posteriors_batch_matches_single(econ3_aod, rng):
    X = rng.dirichlet(np.ones(3), 5)
    sig, post = posteriors(econ3_aod, X)
    for b in range(5):
        for k in range(7):
            for z in range(2):
                if sig[b, k, z] > 0:
                    assert np.allclose(post[b, k, z], lambda_update(econ3_aod, k, z, X[b]))


@settings(max_examples=60, deadline=None)
@given(w=st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3),
       k=st.integers(0, 6), z=st.integers(0, 1))
def test_mixture_property(econ3_aod, w, k, z):
    x = np.array(w) / sum(w)
    m = econ3_aod
    s_i = m.outcome_rows[k, z]
    if x @ s_i < 1e-9:
        return
    xi = x * s_i / (x @ s_i)
    mix = sum(xi[i] * lambda_update(m, k, z, np.eye(3)[i]) for i in range(3) if s_i[i] > 0)
    assert np.allclose(lambda_update(m, k, z, x), mix, atol=1e-12)


def test_linearity_in_x(econ3_aod, rng):
    a, b = rng.dirichlet(np.ones(3), 2)
    t = 0.3
    c = t * a + (1 - t) * b
    assert sigma(econ3_aod, 3, 1, c) == pytest.approx(
        t * sigma(econ3_aod, 3, 1, a) + (1 - t) * sigma(econ3_aod, 3, 1, b))
    J = econ3_aod.joint[3, 1]
    assert np.allclose(c @ J, t * (a @ J) + (1 - t) * (b @ J))


def static_unobserved():
    # modulation never moves and demand does not depend on it
    return ModelSpec([1, 2], build_factored(np.eye(2), [[0.5, 0.5], [0.5, 0.5]]), CostParams(1, 1))


def test_static_unobserved_reachable_is_fixed():
    m = static_unobserved()
    x = np.array([0.3, 0.7])
    B = reachable_beliefs(m, x, 4)
    assert len(B) == 1 and np.allclose(B[0], x)


def test_static_modulation_unit_belief():
    m = ModelSpec([1, 2], build_factored(np.eye(2), [[0.9, 0.1], [0.2, 0.8]]), CostParams(1, 1))
    for i in range(2):
        B = reachable_beliefs(m, unit_belief(2, i), 3, cumulative=True)
        assert len(B) == 1 and np.allclose(B[0], unit_belief(2, i))


def test_reachable_count_bound(econ3_aod):
    for n in range(4):
        B = reachable_beliefs(econ3_aod, e3, n)
        assert len(B) <= 14 ** n
        assert np.allclose(B.sum(axis=1), 1.0) and np.all(B >= 0)
    assert len(reachable_beliefs(bundled_econ3(), e3, 3)) == 343


def bundled_econ3():
    from beliefstock.model import bundled_model
    return bundled_model("econ3")


def test_belief_validation():
    with pytest.raises(BeliefError):
        check_belief([0.5, 0.6])
    with pytest.raises(BeliefError):
        check_belief([-0.1, 1.1])
    with pytest.raises(BeliefError):
        check_belief([1.0], N=2)
    assert np.allclose(parse_belief("0.25, 0.75", 2), [0.25, 0.75])
    with pytest.raises(BeliefError):
        parse_belief("a,b", 2)
    assert np.array_equal(unit_belief(3, 2), e3)


def test_random_models_produce_valid_beliefs(rng):
    for _ in range(5):
        m = random_model(rng, N=3, M=3, Z=2)
        B = reachable_beliefs(m, rng.dirichlet(np.ones(3)), 2, cumulative=True)
        assert np.all(B >= 0) and np.allclose(B.sum(axis=1), 1.0, atol=1e-9)
