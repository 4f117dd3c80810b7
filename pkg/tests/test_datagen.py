import math

import numpy as np
import pytest

from rulesfirst.core import Dataset
from rulesfirst.datagen import (
    ConflictSpec,
    LowerBoundSpec,
    SyntheticSpec,
    check_kb_realizable,
    check_weak_realizable,
    gen_conflict,
    gen_lower_bound,
    gen_synthetic,
    realizability_certificate,
    rule_indicator_weights,
)
from rulesfirst.linear import min_norm_margin_solver


def test_rule_firing_fraction():
    d = gen_synthetic(SyntheticSpec(), 10000, seed=0)
    frac = float((d.dense[:, :20] > 0).any(axis=1).mean())
    assert frac == pytest.approx(1 - (1 - 1 / 60) ** 20, abs=0.015)
    assert np.all(d.y[(d.dense[:, :20] > 0).any(axis=1)] == 1)


def test_no_rules_means_linear_labels():
    spec = SyntheticSpec(p_rule=0.0)
    d = gen_synthetic(spec, 500, seed=1)
    np.testing.assert_array_equal(d.y, np.where(d.dense @ spec.teacher() > 0, 1, -1))


def test_k_zero_is_pure_linear():
    spec = SyntheticSpec(d_total=50, k=0)
    d = gen_synthetic(spec, 200, seed=2)
    assert d.dimension == 50
    np.testing.assert_array_equal(d.y, np.where(d.dense @ np.ones(50) > 0, 1, -1))


def test_generators_reproducible():
    spec = SyntheticSpec(d_total=60, k=5)
    assert gen_synthetic(spec, 100, seed=3) == gen_synthetic(spec, 100, seed=3)
    assert gen_synthetic(spec, 100, seed=3) != gen_synthetic(spec, 100, seed=4)
    c = ConflictSpec()
    assert gen_conflict(c, 50, 9) == gen_conflict(c, 50, 9)


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(p_rule=1.0)
    with pytest.raises(ValueError):
        SyntheticSpec(d_total=10, k=10)
    with pytest.raises(ValueError):
        SyntheticSpec(d_total=10, k=2, w_star=(1.0, 2.0))
    with pytest.raises(ValueError):
        LowerBoundSpec(0, 1)


def test_custom_teacher_on_standard_coordinates():
    spec = SyntheticSpec(d_total=5, k=2, w_star=(1.0, -1.0, 0.5))
    np.testing.assert_array_equal(spec.teacher(), [0, 0, 1.0, -1.0, 0.5])


def test_lower_bound_k2_b2():
    d = gen_lower_bound(LowerBoundSpec(2, 2))
    assert d.m == 6 and d.dimension == 6
    np.testing.assert_allclose(d.dense[0], [0.7071, 0, 0.3536, 0.3536, 0.3536, 0.3536], atol=1e-4)
    assert d.y.tolist() == [1, 1, -1, -1, -1, -1]
    np.testing.assert_allclose(np.linalg.norm(d.dense, axis=1), 1.0, atol=1e-12)


def test_lower_bound_smallest():
    d = gen_lower_bound(LowerBoundSpec(1, 1))
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(d.dense, [[s, s], [0, 1]])
    assert d.y.tolist() == [1, -1]


def _negatives_minus_one(k, B):
    w = np.zeros(k + B * B)
    w[k:] = -1.0
    return w


def test_kb_realizable_examples():
    d = gen_lower_bound(LowerBoundSpec(2, 2))
    w = _negatives_minus_one(2, 2)
    assert check_kb_realizable(d, {0, 1}, w, 2.0)
    assert not check_kb_realizable(d, set(), w, 2.0)
    assert check_kb_realizable(Dataset.empty(6), set(), w, 2.0)
    assert not check_kb_realizable(d, {0, 1}, w, 1.9)


@pytest.mark.parametrize("k,B", [(1, 1), (2, 2), (3, 2), (2, 3)])
def test_lower_bound_is_kb_realizable(k, B):
    d = gen_lower_bound(LowerBoundSpec(k, B))
    assert check_kb_realizable(d, set(range(k)), _negatives_minus_one(k, B), B)


def test_weak_realizable_examples():
    one = Dataset(np.array([[1.0]]), [1])
    assert check_weak_realizable(one, [1.0], [0.0], 0, 1.0)
    d = gen_lower_bound(LowerBoundSpec(2, 2))
    assert not check_weak_realizable(d, np.zeros(6), np.ones(6) * 100, 2, 2.0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_synthetic_certificate_and_weak_realizability(seed):
    spec = SyntheticSpec(d_total=120, k=20)
    d = gen_synthetic(spec, 1000, seed=seed)
    cert = realizability_certificate(d, spec)
    assert cert is not None
    kappa, w, B = cert
    assert check_kb_realizable(d, kappa, w, B)
    wb = rule_indicator_weights(d, kappa, w)
    assert np.count_nonzero(wb) <= len(kappa)
    assert check_weak_realizable(d, w, wb, len(kappa), B)


def test_lower_bound_indicator_weights():
    d = gen_lower_bound(LowerBoundSpec(3, 2))
    w = _negatives_minus_one(3, 2)
    wb = rule_indicator_weights(d, range(3), w)
    assert check_weak_realizable(d, w, wb, 3, 2.0)


def test_conflict_family_is_realizable():
    spec = ConflictSpec(k=5, B=4.0)
    d = gen_conflict(spec, 800, 3)
    assert d.dimension == 105
    assert check_kb_realizable(d, range(5), spec.teacher(), 4.0)
    covered = (d.dense[:, :5] > 0).any(axis=1)
    # covered rows lean the wrong way for the teacher
    assert np.all(d.dense[covered] @ spec.teacher() < 0)


def _grid_min_l2_lower_bound(k, B, step=0.001):
    """Symmetric reduction: weight u on each positive coordinate, v on each negative one.

    Negatives need v <= -1; positives need (u + B v) / sqrt 2 >= 1, so for a
    given v the cheapest u is max(0, sqrt 2 - B v).  Scan v on a grid.
    """
    v = -1.0 - np.arange(0.0, 4.0, step)
    u = np.maximum(0.0, math.sqrt(2.0) - B * v)
    return float((k * u ** 2 + B * B * v ** 2).min())


def test_lower_bound_grid_oracle_matches_analytic():
    analytic = 2 * (math.sqrt(2) + 2) ** 2 + 4
    assert analytic == pytest.approx(27.31, abs=0.01)
    assert _grid_min_l2_lower_bound(2, 2) == pytest.approx(analytic, rel=1e-9)


@pytest.mark.parametrize("k,B", [(1, 1), (2, 2), (3, 2)])
def test_min_norm_lower_bound_invariants(k, B):
    d = gen_lower_bound(LowerBoundSpec(k, B))
    c2 = min_norm_margin_solver(d, "l2")
    c1 = min_norm_margin_solver(d, "l1")
    assert c2.l2_norm ** 2 >= k * B * B
    assert c1.l1_norm ** 2 >= (k * B) ** 2 * 0.5
    assert c2.achieved_min_margin >= 1 - 1e-6 and c1.achieved_min_margin >= 1 - 1e-6
    # within 5% of the optimum from the symmetric reduction
    opt = _grid_min_l2_lower_bound(k, B)
    assert opt * 0.999 <= c2.l2_norm ** 2 <= opt * 1.05 ** 2


def test_min_norm_lower_bound_l1_value():
    d = gen_lower_bound(LowerBoundSpec(2, 2))
    c1 = min_norm_margin_solver(d, "l1")
    assert c1.l1_norm ** 2 >= (2 * (math.sqrt(2) + 2) + 4) ** 2 * 0.9
