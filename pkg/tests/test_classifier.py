import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dvstrack.classifier import ClassifierParams, batch_estimate, init_params, score, update


def params(mu1, s1, mu0, s0, lam=0.85, floor=1e-6):
    return ClassifierParams(mu1, s1, mu0, s0, lam, floor)


def test_identical_likelihoods_score_zero(rng):
    mu, s = rng.normal(size=7), rng.uniform(0.5, 2, size=7)
    p = params(mu, s, mu, s)
    assert np.all(score(p, rng.normal(size=(20, 7))) == 0.0)


def test_symmetric_single_feature():
    p = params([1.0], [1.0], [-1.0], [1.0])
    assert score(p, [0.0]) == 0.0
    assert score(p, [1.0]) == pytest.approx(2.0, abs=1e-12)


def test_score_matches_gaussian_density_ratio(rng):
    mu1, mu0 = rng.normal(size=5), rng.normal(size=5)
    s1, s0 = rng.uniform(0.3, 3, size=5), rng.uniform(0.3, 3, size=5)
    v = rng.normal(size=5)
    pdf = lambda x, m, s: math.exp(-0.5 * ((x - m) / s) ** 2) / (s * math.sqrt(2 * math.pi))
    ref = sum(math.log(pdf(v[i], mu1[i], s1[i]) / pdf(v[i], mu0[i], s0[i])) for i in range(5))
    assert score(params(mu1, s1, mu0, s0), v) == pytest.approx(ref, rel=1e-12)


def test_batch_estimate_examples():
    assert batch_estimate([[2.0]]) == (pytest.approx([2.0]), pytest.approx([1e-6]))
    mu, s = batch_estimate([[1.0], [3.0]])
    assert mu.tolist() == [2.0] and s.tolist() == [1.0]
    mu, s = batch_estimate([[5.0], [5.0], [5.0]], sigma_floor=0.01)
    assert s.tolist() == [0.01]


def test_batch_estimate_rejects_empty():
    with pytest.raises(ValueError):
        batch_estimate(np.empty((0, 3)))


def test_update_requires_samples():
    p = params([0.0], [1.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        update(p, np.empty((0, 1)), [[1.0]])


def test_update_worked_example():
    p = params([0.0], [1.0], [0.0], [1.0], lam=0.5)
    q = update(p, [[1.0], [3.0]], [[1.0], [3.0]])
    assert q.mu1[0] == 1.0
    assert q.sigma1[0] == pytest.approx(math.sqrt(2), abs=1e-12)


def test_lambda_one_is_identity(rng):
    p = params(rng.normal(size=6), rng.uniform(1, 2, 6), rng.normal(size=6), rng.uniform(1, 2, 6), lam=1.0)
    q = update(p, rng.normal(size=(10, 6)), rng.normal(size=(10, 6)))
    for a in ("mu1", "sigma1", "mu0", "sigma0"):
        np.testing.assert_array_equal(getattr(q, a), getattr(p, a))


def test_lambda_zero_is_batch_estimate(rng):
    p = params(rng.normal(size=6), rng.uniform(1, 2, 6), rng.normal(size=6), rng.uniform(1, 2, 6), lam=0.0)
    P, N = rng.normal(size=(10, 6)), rng.normal(3, 2, size=(12, 6))
    q = update(p, P, N)
    m1, s1 = batch_estimate(P)
    m0, s0 = batch_estimate(N)
    assert np.array_equal(q.mu1, m1) and np.array_equal(q.sigma1, s1)
    assert np.array_equal(q.mu0, m0) and np.array_equal(q.sigma0, s0)


def test_init_params(rng):
    c = rng.normal(size=4)
    p = init_params(np.tile(c, (5, 1)), rng.normal(size=(5, 4)))
    np.testing.assert_array_equal(p.mu1, c)
    assert np.all(p.sigma1 == 1e-6)
    P = rng.normal(size=(9, 4))
    assert np.array_equal(init_params(P, rng.normal(size=(3, 4))).mu1, batch_estimate(P)[0])


def test_init_separates_well_separated_classes(rng):
    P = rng.normal(10.0, 1.0, size=(200, 8))
    N = rng.normal(0.0, 1.0, size=(200, 8))
    p = init_params(P, N)
    assert score(p, P.mean(axis=0)) > score(p, N.mean(axis=0))


def test_score_monotone_between_means():
    p = params([3.0], [1.5], [-2.0], [1.5])
    v = np.linspace(-10, 10, 401)[:, None]
    assert np.all(np.diff(score(p, v)) > 0)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=1, max_size=6),
       st.floats(0, 1), st.integers(1, 5))
def test_sigma_never_below_floor(rows, lam, reps):
    floor = 1e-3
    V = np.array(rows)
    p = ClassifierParams([0.0, 0.0], [floor, floor], [0.0, 0.0], [floor, floor], lam, floor)
    for _ in range(reps):
        p = update(p, V, V[:1])
        assert np.all(p.sigma1 >= floor) and np.all(p.sigma0 >= floor)


def test_ranking_invariant_under_feature_scaling(rng):
    P = rng.normal(4.0, 1.0, size=(30, 5))
    N = rng.normal(0.0, 2.0, size=(30, 5))
    C = rng.normal(2.0, 2.0, size=(25, 5))
    base = np.argsort(score(init_params(P, N), C))
    for c in (0.5, 3.0, 17.0):
        # floor scaled with the features keeps it inactive
        scaled = init_params(P * c, N * c, sigma_floor=1e-6 * c)
        assert np.array_equal(np.argsort(score(scaled, C * c)), base)
        np.testing.assert_allclose(score(scaled, C * c), score(init_params(P, N), C), rtol=1e-6, atol=1e-6)
