import numpy as np
import pytest

from gatedbandit.baselines import (
    LinearPosterior,
    LinearTSPolicy,
    UniformPolicy,
    linear_ts_select,
    linear_ts_update,
    uniform_select,
)


def test_uniform_single_action():
    rng = np.random.default_rng(0)
    assert all(uniform_select(1, rng) == 0 for _ in range(100))


def test_uniform_frequencies():
    rng = np.random.default_rng(1)
    draws = np.array([uniform_select(4, rng) for _ in range(100_000)])
    freq = np.bincount(draws, minlength=4) / draws.size
    assert np.all(np.abs(freq - 0.25) < 0.01)


def test_uniform_deterministic():
    a = UniformPolicy(5, np.random.default_rng(3))
    b = UniformPolicy(5, np.random.default_rng(3))
    assert [a.select_action(None) for _ in range(50)] == [b.select_action(None) for _ in range(50)]


def test_prior_tie_goes_to_lowest_index():
    post = LinearPosterior(4, 3, noise_var=0.0)
    assert linear_ts_select(post, [0.2, 0.5, 0.9], np.random.default_rng(0)) == 0


def test_recovers_noiseless_linear_weights():
    rng = np.random.default_rng(4)
    w, c = np.array([0.7, -1.3, 2.0]), 0.4
    post = LinearPosterior(2, 3)
    # ridge shrinkage is O(lam / n), so n must be large for 1e-3
    for _ in range(100_000):
        x = rng.random(3)
        linear_ts_update(post, x, 1, float(x @ w + c))
    assert np.allclose(post.mean(1), np.append(w, c), atol=1e-3)


def test_update_isolation():
    post = LinearPosterior(2, 2)
    p1, m1 = post.precision[1].copy(), post.moment[1].copy()
    linear_ts_update(post, [0.3, 0.4], 0, 1.0)
    assert np.array_equal(post.precision[1], p1) and np.array_equal(post.moment[1], m1)


def test_mean_matches_batch_ridge():
    rng = np.random.default_rng(5)
    post = LinearPosterior(3, 4, lam=0.5)
    data = {a: [] for a in range(3)}
    for _ in range(300):
        x, a, r = rng.random(4), int(rng.integers(3)), float(rng.normal())
        linear_ts_update(post, x, a, r)
        data[a].append((np.append(x, 1.0), r))
    for a in range(3):
        phi = np.array([p for p, _ in data[a]])
        r = np.array([v for _, v in data[a]])
        ridge = np.linalg.solve(phi.T @ phi + 0.5 * np.eye(5), phi.T @ r)
        assert np.allclose(post.mean(a), ridge, atol=1e-10)


def test_sample_covariance():
    rng = np.random.default_rng(6)
    post = LinearPosterior(1, 2, noise_var=0.25)
    for _ in range(20):
        linear_ts_update(post, rng.random(2), 0, 1.0)
    draws = np.array([post.sample(0, rng) for _ in range(40_000)])
    expected = 0.25 * np.linalg.inv(post.precision[0])
    assert np.allclose(np.cov(draws.T), expected, atol=0.05 * np.abs(expected).max())
    assert np.allclose(draws.mean(axis=0), post.mean(0), atol=0.02)


def test_bad_arguments():
    with pytest.raises(ValueError):
        LinearPosterior(2, 2, lam=0.0)
    with pytest.raises(ValueError):
        LinearPosterior(2, 2).features([0.1, 0.2, 0.3])


def test_policy_learns_linear_task():
    rng = np.random.default_rng(7)
    pol = LinearTSPolicy(2, 2, rng=np.random.default_rng(8))
    hits = 0
    for t in range(2000):
        x = rng.random(2)
        means = np.array([x[0], x[1]])
        a = pol.select_action(x)
        pol.observe(x, a, float(means[a] + 0.1 * rng.normal()))
        if t >= 1500:
            hits += a == int(np.argmax(means))
    assert hits / 500 > 0.8
