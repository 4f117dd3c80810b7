import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rulesfirst.core import DataError, Dataset, NormRegime, Rule, accuracy
from rulesfirst.datagen import SyntheticSpec, gen_synthetic, realizability_certificate
from rulesfirst.linear import TrainConfig, train_penalized_logistic
from rulesfirst.rules import (
    GreedyConfig,
    NearRuleConfig,
    candidate_pool,
    find_perfect_rules,
    greedy_eval_loss,
    greedy_eval_path,
    greedy_rule,
    near_rule_score,
    select_near_rules,
)


def test_find_perfect_rules_examples(tiny):
    assert find_perfect_rules(tiny, 1) == [(0, 2)]
    assert find_perfect_rules(Dataset(np.array([[1.0]]), [1]), 1) == [(0, 1)]
    neg = Dataset(np.array([[1.0, 0.0], [0.0, 2.0]]), [-1, -1])
    assert find_perfect_rules(neg, 1) == []
    assert find_perfect_rules(Dataset(np.zeros((2, 2)), [1, 1]), 1) == []
    with pytest.raises(DataError):
        find_perfect_rules(Dataset.empty(2), 1)


def test_find_perfect_rules_ordering():
    X = np.array([[1, 1, 1], [1, 0, 1], [0, 0, 1]], dtype=float)
    assert find_perfect_rules(Dataset(X, [1, 1, 1]), 1) == [(2, 3), (0, 2), (1, 1)]


def test_greedy_threshold_arithmetic():
    cfg = GreedyConfig(k=2, B=2)
    assert cfg.threshold(1200) == pytest.approx(2.0)
    assert cfg.max_rules == 600


def test_greedy_threshold_is_strict():
    # feature 0 covers exactly threshold-many rows and must be refused
    cfg = GreedyConfig(k=1, B=1, coverage_constant=1)  # threshold m/2
    X = np.array([[1, 0], [1, 0], [0, 1], [0, -1]], dtype=float)
    model = greedy_rule(Dataset(X, [1, 1, 1, -1]), cfg)
    assert len(model.rule_set) == 0


def test_greedy_single_covering_rule():
    # feature 0 marks every positive; the rest is separable on feature 1
    X = np.array([[1, -1], [1, -0.5], [1, 0.2], [0, -1], [0, -0.7]], dtype=float)
    d = Dataset(X, [1, 1, 1, -1, -1])
    model = greedy_rule(d, GreedyConfig(k=1, B=2, coverage_constant=1))
    assert [r.feature for r in model.rule_set] == [0]
    assert accuracy(model, d) == 1.0


def test_greedy_realizable_sample_weak_learner():
    spec = SyntheticSpec()
    d = gen_synthetic(spec, 3000, seed=0)
    kappa, w, B = realizability_certificate(d, spec)
    model = greedy_rule(d, GreedyConfig(k=20, B=B))
    assert 1 - accuracy(model, d) <= 0.25


def _replay(d, model):
    """Each adopted rule was perfect on the rows still uncovered at that time."""
    F = d.dense > 0
    remaining = np.ones(d.m, dtype=bool)
    for r in model.rule_set:
        hit = remaining & F[:, r.feature]
        assert hit.any() and np.all(d.y[hit] == r.label)
        remaining &= ~F[:, r.feature]


@given(st.integers(0, 10_000), st.integers(1, 6), st.sampled_from([0.5, 2.0, 10.0]))
def test_greedy_rule_invariants(seed, k, c):
    rng = np.random.default_rng(seed)
    m, d = 60, 8
    X = (rng.random((m, d)) < 0.2) * rng.uniform(0.5, 2, (m, d)) + rng.normal(0, 0.3, (m, d)) * (rng.random((m, d)) < 0.3)
    y = np.where(rng.random(m) < 0.6, 1, -1)
    data = Dataset(X, y)
    cfg = GreedyConfig(k=k, B=1.0, coverage_constant=c, polarities=(1, -1))
    model = greedy_rule(data, cfg)
    assert len(model.rule_set) <= math.ceil(c * k * 2)
    covered = model.rule_set.first_firing(data.dense) >= 0
    labels = model.predict_labels(data.dense)
    assert np.all(labels[covered] == data.y[covered])
    _replay(data, model)


def test_greedy_everything_covered_gives_zero_linear():
    d = Dataset(np.array([[1.0, 0.0], [1.0, 0.0]]), [1, 1])
    model = greedy_rule(d, GreedyConfig(k=1, B=1, coverage_constant=1))
    assert len(model.rule_set) == 1
    assert not model.linear.weights.any()


def test_greedy_config_validation():
    with pytest.raises(ValueError):
        GreedyConfig(k=0, B=1)
    with pytest.raises(ValueError):
        GreedyConfig(k=1, B=0)
    with pytest.raises(ValueError):
        GreedyConfig(k=1, B=1, train=TrainConfig(NormRegime.l2_penalty(1.0)))


def _l2(C):
    return TrainConfig(NormRegime.l2_penalty(C))


def test_eval_loss_budget_zero_is_plain_logistic():
    data = gen_synthetic(SyntheticSpec(d_total=60, k=6), 300, seed=5)
    tr, ev = data.subset(range(200)), data.subset(range(200, 300))
    model = greedy_eval_loss(tr, ev, candidate_pool(tr, 10), 0, _l2(300.0))
    base = train_penalized_logistic(data, _l2(300.0))
    assert len(model.rule_set) == 0
    np.testing.assert_array_equal(model.predict_labels(data.dense), base.predict(data.dense))
    np.testing.assert_array_equal(model.linear.weights, base.weights)


def _planted(seed, m):
    """Feature 1 is a rule whose positives sit on the wrong side of feature 0; feature 2 is noise."""
    rng = np.random.default_rng(seed)
    rule = rng.random(m) < 0.3
    x0 = np.where(rng.random(m) < 0.5, 1, -1) * rng.uniform(2.0, 4.0, m)
    x0[rule] = -rng.uniform(2.0, 4.0, rule.sum())
    noise = (rng.random(m) < 0.3).astype(float)
    y = np.where(rule | (x0 > 0), 1, -1)
    return Dataset(np.column_stack([x0, rule.astype(float), noise]), y)


def test_eval_loss_picks_planted_rule_first():
    tr, ev = _planted(0, 300), _planted(1, 150)
    # strong regularization: the baseline cannot buy a rule-sized weight
    base = train_penalized_logistic(tr, _l2(1.0))
    rule_pos = (ev.dense[:, 1] > 0) & (ev.y == 1)
    assert np.mean(base.predict(ev.dense)[rule_pos] != 1) >= 0.3
    path = greedy_eval_path(tr, ev, [(2, 1), (1, 1)], 2, _l2(1.0))
    assert path[1]["rule"] == Rule(1, 1)
    assert path[1]["eval_loss"] < path[0]["eval_loss"]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_eval_loss_non_increasing(seed):
    data = gen_synthetic(SyntheticSpec(d_total=80, k=8), 450, seed=seed)
    tr, ev = data.subset(range(300)), data.subset(range(300, 450))
    path = greedy_eval_path(tr, ev, candidate_pool(tr, 15), 15, _l2(450.0))
    losses = [p["eval_loss"] for p in path]
    assert all(b < a for a, b in zip(losses, losses[1:]))
    model = greedy_eval_loss(tr, ev, candidate_pool(tr, 15), 15, _l2(450.0))
    assert [r for r, _ in model.info["eval_path"][1:]] == [(p["rule"].feature, p["rule"].label) for p in path[1:]]


def test_eval_loss_forced_mode_takes_full_budget():
    data = gen_synthetic(SyntheticSpec(d_total=80, k=8), 300, seed=3)
    tr, ev = data.subset(range(200)), data.subset(range(200, 300))
    path = greedy_eval_path(tr, ev, candidate_pool(tr, 12), 12, _l2(300.0), stop="never")
    assert len(path) == 13
    with pytest.raises(ValueError):
        greedy_eval_path(tr, ev, [], 1, _l2(300.0), stop="sometimes")
    with pytest.raises(DataError):
        greedy_eval_path(tr, Dataset.empty(tr.dimension), [], 1, _l2(300.0))


def test_near_rule_score_example():
    assert near_rule_score(16, 0.9) == pytest.approx(3.6)


def _binary(columns, y):
    return Dataset(np.column_stack(columns).astype(float), y)


def test_select_near_rules_floors():
    m = 40
    y = np.array([1] * 30 + [-1] * 10)
    rare = np.zeros(m); rare[30:33] = 1                         # M = 3, all negative
    impure = np.zeros(m); impure[:15] = 1; impure[30:40] = 1    # M = 25, p(+) = 0.6
    neg_rule = np.zeros(m); neg_rule[30:38] = 1                 # M = 8, all negative
    pos_rule = np.zeros(m); pos_rule[:20] = 1                   # M = 20, all positive
    d = _binary([rare, impure, neg_rule, pos_rule], y)
    got = select_near_rules(d, NearRuleConfig(), 0.5)
    assert [(j, lab) for j, lab, _ in got] == [(3, 1), (2, -1)]
    assert got[0][2] == pytest.approx(math.sqrt(20))
    # positives need four times the threshold: sqrt(20) < 4 * 1.2
    assert [(j, lab) for j, lab, _ in select_near_rules(d, NearRuleConfig(), 1.2)] == [(2, -1)]
    assert select_near_rules(d, NearRuleConfig(), 100.0) == []


def test_select_near_rules_prefers_purity_at_equal_frequency():
    m = 60
    y = np.array([1] * 50 + [-1] * 10)
    pure = np.zeros(m); pure[:20] = 1
    dirty = np.zeros(m); dirty[:19] = 1; dirty[50] = 1
    got = select_near_rules(_binary([dirty, pure], y), NearRuleConfig(), 0.1)
    assert [j for j, _, _ in got] == [1, 0]


def test_select_near_rules_needs_binary():
    with pytest.raises(DataError):
        select_near_rules(Dataset(np.array([[0.5]]), [1]), NearRuleConfig(), 1.0)


def test_near_rule_config_validation():
    with pytest.raises(ValueError):
        NearRuleConfig(min_prob_pos=0.5)
    with pytest.raises(ValueError):
        NearRuleConfig(min_count_neg=0)


def test_candidate_pool_perfect_first():
    X = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1], [0, 0, 1]], dtype=float)
    d = Dataset(X, [1, 1, -1, -1])
    assert candidate_pool(d, pad=False) == [(0, 1)]
    pool = candidate_pool(d, 3)
    assert pool[0] == (0, 1) and len(pool) == 3
    assert len({j for j, _ in pool}) == 3
