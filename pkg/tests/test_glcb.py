import math

import numpy as np
import pytest

from gatedbandit.glcb import (
    TABLE_KEYS,
    GlcbAgent,
    GlcbConfig,
    argmax_with_sentinel,
    schedule,
)
from gatedbandit.pseudocount import pseudocount

SMALL = dict(layer_widths=(8, 4, 1))


def agent(num_actions=3, dim=2, seed=0, mode="bernoulli", **kw):
    return GlcbAgent(num_actions, dim, GlcbConfig.defaults(mode, **{**SMALL, **kw}), seed)


def test_schedule_examples():
    assert schedule(0.1, 0.1, 0) == 0.1
    assert schedule(0.1, 0.1, 10) == pytest.approx(0.05, abs=1e-15)
    assert schedule(1.0, 0.01, 100) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        schedule(0.0, 0.1, 1)


def test_defaults_per_mode():
    b = GlcbConfig.defaults("bernoulli")
    assert (b.exploration_c, b.planes_per_unit, b.bias_scale, b.lr_init, b.lr_decay) == (0.03, 8, 0.05, 0.1, 0.1)
    c = GlcbConfig.defaults("continuous")
    assert (c.exploration_c, c.planes_per_unit, c.bias_scale, c.lr_init, c.lr_decay, c.depth) == (0.1, 2, 0.001, 1.0, 0.01, 3)
    assert b.layer_widths == c.layer_widths == (100, 10, 1)


def test_from_mapping_accepts_table_names():
    cfg = GlcbConfig.from_mapping({"mode": "continuous", "UCB exploration bonus": 0.5,
                                   "tree depth": 2, "GLN network shape": [20, 1]})
    assert cfg.exploration_c == 0.5 and cfg.depth == 2 and cfg.layer_widths == (20, 1)
    assert cfg.lr_init == 1.0
    assert set(TABLE_KEYS.values()) <= set(GlcbConfig.__dataclass_fields__)
    with pytest.raises(ValueError):
        GlcbConfig.from_mapping({"nonsense": 1})


def test_first_step_picks_action_zero():
    assert agent().select_action([0.3, 0.3]) == 0


def test_unpulled_action_chosen():
    ag = agent()
    x = np.array([0.5, 0.2])
    for a in (0, 2, 0, 2):
        ag.observe(x, a, 1.0)
    assert ag.select_action(x) == 1


def test_zero_exploration_is_greedy():
    ag = agent(exploration_c=0.0)
    rng = np.random.default_rng(1)
    for _ in range(30):
        x = rng.random(2)
        ag.observe(x, int(rng.integers(3)), float(rng.integers(2)))
    for _ in range(20):
        x = rng.random(2)
        values, bonuses = ag.scores(x)
        if np.isinf(bonuses).any():
            continue
        assert np.all(bonuses == 0)
        assert ag.select_action(x) == int(np.argmax(values))


def test_sentinel_ties():
    assert argmax_with_sentinel([0.9, 0.1, 0.5], [1.0, math.inf, math.inf]) == 1
    assert argmax_with_sentinel([0.2, 0.4, 0.4], [0.0, 0.0, 0.0]) == 1


def test_select_is_pure():
    ag = agent()
    ag.observe([0.1, 0.9], 0, 1.0)
    buf, pulls, t = ag.params.buffer.copy(), ag.counts.pulls.copy(), ag.t
    ag.select_action([0.4, 0.4])
    assert np.array_equal(buf, ag.params.buffer) and np.array_equal(pulls, ag.counts.pulls) and ag.t == t


def test_context_dimension_checked():
    with pytest.raises(ValueError):
        agent().select_action([0.1, 0.2, 0.3])


@pytest.mark.parametrize("mode", ["bernoulli", "continuous"])
def test_observe_touches_only_its_estimator(mode):
    ag = agent(mode=mode)
    rng = np.random.default_rng(2)
    for _ in range(20):
        a = int(rng.integers(3))
        before = [ag.params[b].copy() for b in range(3)]
        ag.observe(rng.random(2), a, float(rng.integers(2)))
        for b in range(3):
            if b != a:
                assert ag.params[b].equals(before[b])


def test_learning_rate_after_one_pull():
    ag = agent()
    assert ag.learning_rate(1) == 0.1
    ag.observe([0.3, 0.3], 1, 0.0)
    assert ag.learning_rate(1) == pytest.approx(0.1 / 1.1, abs=1e-15)
    assert ag.learning_rate(0) == 0.1
    assert ag.t == 1


def test_pseudocount_grows_from_equal_counts():
    ag = agent()
    x = np.array([0.7, 0.1])
    sig = ag.signature(x)
    for _ in range(3):
        before = pseudocount(ag.counts, sig, 2, max(ag.t, 1))
        ag.observe(x, 2, 1.0)
        assert pseudocount(ag.counts, sig, 2, max(ag.t, 1)) > before


@pytest.mark.parametrize("mode", ["bernoulli", "continuous"])
def test_determinism(mode):
    def actions(seed):
        ag = agent(mode=mode, seed=seed)
        rng = np.random.default_rng(5)
        out = []
        for _ in range(200):
            x = rng.random(2)
            a = ag.select_action(x)
            out.append(a)
            ag.observe(x, a, float(rng.random() < 0.3 + 0.2 * a))
        return out
    assert actions(7) == actions(7)


def test_coverage_on_fixed_context():
    # exploration constant 1.0: with the tabled 0.03 the bonus cannot beat a 0.1 gap
    rng = np.random.default_rng(100)
    ag = GlcbAgent(3, 2, GlcbConfig.defaults(exploration_c=1.0), 0)
    x = np.array([0.4, 0.6])
    means = [0.5, 0.6, 0.7]
    for _ in range(10_000):
        a = ag.select_action(x)
        ag.observe(x, a, float(rng.random() < means[a]))
    assert ag.counts.pulls.min() >= math.ceil(math.log2(10_000))


@pytest.mark.parametrize("mode", ["bernoulli", "continuous"])
def test_selected_score_is_maximal(mode):
    ag = agent(mode=mode, exploration_c=0.2)
    rng = np.random.default_rng(3)
    for _ in range(300):
        x = rng.random(2)
        values, bonuses = ag.scores(x)
        a = ag.select_action(x)
        if np.isinf(bonuses).any():
            assert np.isinf(bonuses[a])
        else:
            assert np.all(values[a] + bonuses[a] >= values + bonuses)
        ag.observe(x, a, float(rng.integers(2)))


def test_reward_validation():
    ag = agent()
    with pytest.raises(ValueError):
        ag.observe([0.1, 0.1], 0, 0.5)
    with pytest.raises(IndexError):
        ag.observe([0.1, 0.1], 3, 1.0)
    cont = agent(mode="continuous", r_min=-1.0, r_max=2.0)
    cont.observe([0.1, 0.1], 0, 2.0 + 1e-12)
    with pytest.raises(ValueError):
        cont.observe([0.1, 0.1], 0, 2.001)


def test_continuous_values_match_tree():
    ag = agent(mode="continuous", r_min=0.0, r_max=10.0)
    rng = np.random.default_rng(4)
    for _ in range(50):
        ag.observe(rng.random(2), int(rng.integers(3)), 10 * rng.random())
    x = rng.random(2)
    vals = ag.values(x)
    for a in range(3):
        assert vals[a] == pytest.approx(ag.expected_reward(x, a), abs=1e-12)
        assert 0.0 <= vals[a] <= 10.0


@pytest.mark.parametrize("mode", ["bernoulli", "continuous"])
def test_save_load_round_trip(mode, tmp_path):
    ag = agent(mode=mode)
    rng = np.random.default_rng(6)
    for _ in range(40):
        x = rng.random(2)
        ag.observe(x, ag.select_action(x), float(rng.integers(2)))
    path = tmp_path / "agent.npz"
    ag.save(path)
    back = GlcbAgent.load(path)
    assert back.t == ag.t and back.config == ag.config and back.gating == ag.gating
    assert np.array_equal(back.params.buffer, ag.params.buffer)
    for _ in range(30):
        x = rng.random(2)
        a = ag.select_action(x)
        assert back.select_action(x) == a
        ag.observe(x, a, 1.0)
        back.observe(x, a, 1.0)
    assert np.array_equal(back.params.buffer, ag.params.buffer)
