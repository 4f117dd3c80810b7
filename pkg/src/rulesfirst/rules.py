"""Rule detection and the greedy rules-first learners.

Two learners live here:

* :func:`greedy_rule` adopts perfect rules by remaining coverage until none
  covers more than ``m / (c k (B + 1))`` of the not-yet-covered examples,
  then fits a norm-constrained hinge classifier on what is left.
* :func:`greedy_eval_loss` grows the rule set one candidate at a time,
  keeping whichever candidate gives the lowest evaluation error after
  refitting a penalized logistic model on the uncovered training rows.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DataError, Dataset, LinearModel, NormRegime, Rule, RuleSet, RulesFirstModel, sign
from .linear import TrainConfig, fit_logistic_arrays, train_constrained_hinge

logger = logging.getLogger(__name__)

__all__ = [
    "GreedyConfig",
    "NearRuleConfig",
    "find_perfect_rules",
    "greedy_rule",
    "greedy_eval_path",
    "greedy_eval_loss",
    "near_rule_score",
    "select_near_rules",
    "candidate_pool",
]


@dataclass(frozen=True)
class GreedyConfig:
    """Settings for :func:`greedy_rule`.

    ``train`` defaults to an l2 ball of radius ``B``.  ``polarities`` lists
    the rule labels considered; the one-sided default only adopts rules that
    predict +1.
    """

    k: int
    B: float
    coverage_constant: float = 100.0
    train: TrainConfig | None = None
    polarities: tuple = (1,)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if not self.B > 0:
            raise ValueError("B must be positive")
        if not self.coverage_constant > 0:
            raise ValueError("coverage_constant must be positive")
        if self.train is None:
            object.__setattr__(self, "train", TrainConfig(NormRegime.l2_ball(self.B)))
        if not self.train.norm_regime.is_ball:
            raise ValueError("greedy_rule trains the linear part inside a norm ball")
        for p in self.polarities:
            if p not in (-1, 1):
                raise ValueError("polarities must be drawn from {-1, +1}")

    def threshold(self, m: int) -> float:
        return m / (self.coverage_constant * self.k * (self.B + 1))

    @property
    def max_rules(self) -> int:
        return math.ceil(self.coverage_constant * self.k * (self.B + 1))


@dataclass(frozen=True)
class NearRuleConfig:
    min_count_pos: int = 16
    min_count_neg: int = 4
    min_prob_pos: float = 0.9
    min_prob_neg: float = 0.75
    top_k: int | None = None
    # threshold multiplier for rules predicting the positive label
    positive_factor: float = 4.0

    def __post_init__(self):
        for p in (self.min_prob_pos, self.min_prob_neg):
            if not 0.5 < p <= 1:
                raise ValueError("probability floors must lie in (0.5, 1]")
        if self.min_count_pos < 1 or self.min_count_neg < 1:
            raise ValueError("count floors must be >= 1")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be positive")


def _fires(data: Dataset) -> np.ndarray:
    return (data.dense > 0).astype(float)


def _perfect_from_counts(total, agree):
    """Indices with full agreement, sorted by coverage desc then index asc."""
    ok = np.nonzero((total > 0) & (agree == total))[0]
    order = np.lexsort((ok, -total[ok]))
    return [(int(j), int(total[j])) for j in ok[order]]


def find_perfect_rules(data: Dataset, for_label: int) -> list[tuple[int, int]]:
    """Features that fire only on examples labeled ``for_label``, with their coverage."""
    if data.m == 0:
        raise DataError("empty dataset")
    F = _fires(data)
    total = F.sum(axis=0)
    agree = (data.y == for_label).astype(float) @ F
    return _perfect_from_counts(total, agree)


def greedy_rule(data: Dataset, config: GreedyConfig) -> RulesFirstModel:
    """Greedy rule adoption followed by a ball-constrained hinge fit on the remainder.

    At every step the perfect rule (on the remaining examples) with the largest
    remaining coverage is adopted, ties going to the lower feature index, as
    long as that coverage exceeds ``config.threshold(m)``.  Covered examples
    are discarded whatever their label.
    """
    if data.m == 0:
        raise DataError("empty dataset")
    F = _fires(data)
    y = data.y
    thr = config.threshold(data.m)
    remaining = np.ones(data.m, dtype=bool)
    rules: list[Rule] = []
    trace = []
    used = np.zeros(data.dimension, dtype=bool)
    while remaining.any():
        rem = remaining.astype(float)
        total = rem @ F
        total[used] = 0.0
        best = None
        for pol in config.polarities:
            agree = (remaining & (y == pol)).astype(float) @ F
            perfect = _perfect_from_counts(total, agree)
            if perfect and (best is None or (perfect[0][1], -perfect[0][0]) > (best[1], -best[0])):
                best = (perfect[0][0], perfect[0][1], pol)
        if best is None or not best[1] > thr:
            break
        j, cov, pol = best
        rules.append(Rule(j, pol))
        used[j] = True
        trace.append({"feature": j, "label": pol, "coverage": cov, "remaining_before": int(remaining.sum())})
        remaining &= F[:, j] == 0
    rest = np.nonzero(remaining)[0]
    if rest.size:
        linear = train_constrained_hinge(data.subset(rest), config.train)
    else:
        linear = LinearModel.zeros(data.dimension, config.train.norm_regime)
    logger.debug("greedy_rule: %d rules, %d examples left for the linear part", len(rules), rest.size)
    return RulesFirstModel(RuleSet(rules), linear, info={"trace": trace, "threshold": thr})


# ---------------------------------------------------------------------------
# Evaluation-loss greedy
# ---------------------------------------------------------------------------


STOP_MODES = ("strict", "ties", "never")


def _as_rules(candidates) -> list[Rule]:
    out = []
    seen = set()
    for c in candidates:
        r = c if isinstance(c, Rule) else Rule(int(c[0]), int(c[1]))
        if r.feature in seen:
            continue
        seen.add(r.feature)
        out.append(r)
    return out


class _LinearFitter:
    """Refits the logistic part on the rows no rule covers, rule columns pinned at zero."""

    def __init__(self, data: Dataset, config: TrainConfig):
        if not config.norm_regime.is_penalty:
            raise ValueError("greedy_eval_loss trains a penalized logistic model")
        self.X = data.dense
        self.y = data.y
        self.F = data.dense > 0
        self.config = config
        self.regime = config.norm_regime

    def covered(self, rules) -> np.ndarray:
        if not rules:
            return np.zeros(self.X.shape[0], dtype=bool)
        return self.F[:, [r.feature for r in rules]].any(axis=1)

    def fit(self, rules, init=None):
        d = self.X.shape[1]
        rows = ~self.covered(rules)
        mask = np.ones(d, dtype=bool)
        mask[[r.feature for r in rules]] = False
        if not rows.any():
            return np.zeros(d), 0.0
        w, c, _ = fit_logistic_arrays(
            self.X[rows], self.y[rows], self.regime.kind, self.regime.value, self.config, init=init,
            col_mask=mask if rules else None,
        )
        return w, c

    def model(self, rules, w, c, info=None) -> RulesFirstModel:
        return RulesFirstModel(RuleSet(rules), LinearModel(w, self.regime, bias=c), info=info or {})


def _eval_error(X_eval, y_eval, F_eval, rules, w, c) -> float:
    pred = sign(X_eval @ w + c)
    if rules:
        feats = [r.feature for r in rules]
        fired = F_eval[:, feats]
        any_fired = fired.any(axis=1)
        first = np.argmax(fired, axis=1)
        labels = np.array([r.label for r in rules], dtype=np.int8)
        pred = np.where(any_fired, labels[first], pred)
    return float(np.mean(pred != y_eval))


def greedy_eval_path(
    train: Dataset,
    eval: Dataset,
    candidates,
    budget: int,
    train_cfg: TrainConfig,
    *,
    stop: str = "strict",
) -> list[dict]:
    """Forward selection of rules by evaluation mis-classification error.

    Returns the accepted steps in order, each ``{"rule": Rule, "eval_loss": float}``,
    preceded by a step-0 entry with ``rule=None`` for the rule-free model.

    ``stop`` controls early termination: ``"strict"`` ends the search once no
    candidate strictly lowers the evaluation error, ``"ties"`` once every
    candidate raises it, and ``"never"`` always takes
    ``min(budget, len(candidates))`` rules.
    """
    if stop not in STOP_MODES:
        raise ValueError(f"stop must be one of {STOP_MODES}, got {stop!r}")
    if eval.m == 0:
        raise DataError("empty evaluation set")
    if train.m == 0:
        raise DataError("empty dataset")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    pool = _as_rules(candidates)
    fitter = _LinearFitter(train, train_cfg)
    Xe, ye, Fe = eval.dense, eval.y, eval.dense > 0
    rules: list[Rule] = []
    w, c = fitter.fit(rules)
    current = _eval_error(Xe, ye, Fe, rules, w, c)
    path = [{"rule": None, "eval_loss": current}]
    for step in range(budget):
        if not pool:
            break
        best = None
        for cand in pool:
            trial = rules + [cand]
            init = (np.where(np.arange(w.size) == cand.feature, 0.0, w), c)
            tw, tc = fitter.fit(trial, init=init)
            err = _eval_error(Xe, ye, Fe, trial, tw, tc)
            if best is None or err < best[0]:
                best = (err, cand, tw, tc)
        err, cand, tw, tc = best
        if (stop == "strict" and not err < current) or (stop == "ties" and err > current):
            break
        rules.append(cand)
        pool.remove(cand)
        w, c, current = tw, tc, err
        path.append({"rule": cand, "eval_loss": err})
        logger.debug("greedy_eval step %d: rule %s, eval loss %.4f", step + 1, cand, err)
    return path


def refit_rules_first(data: Dataset, rules, train_cfg: TrainConfig, info=None) -> RulesFirstModel:
    """Fit the logistic part from scratch on ``data`` rows that ``rules`` leave uncovered."""
    fitter = _LinearFitter(data, train_cfg)
    rules = list(rules)
    w, c = fitter.fit(rules)
    return fitter.model(rules, w, c, info)


def greedy_eval_loss(
    train: Dataset,
    eval: Dataset,
    candidates,
    budget: int,
    train_cfg: TrainConfig,
    *,
    stop: str = "strict",
    refit_on_union: bool = True,
) -> RulesFirstModel:
    """Greedy rule selection by evaluation loss, then a final refit.

    The final model is refit from scratch on ``train`` plus ``eval`` (all the
    labeled data) unless ``refit_on_union`` is false.  ``budget == 0`` or an
    empty candidate list gives a pure linear model.
    """
    path = greedy_eval_path(train, eval, candidates, budget, train_cfg, stop=stop)
    rules = [p["rule"] for p in path[1:]]
    data = train.concat(eval) if refit_on_union else train
    info = {"eval_path": [(None if p["rule"] is None else (p["rule"].feature, p["rule"].label), p["eval_loss"]) for p in path]}
    return refit_rules_first(data, rules, train_cfg, info)


# ---------------------------------------------------------------------------
# Near-rule candidates
# ---------------------------------------------------------------------------


def near_rule_score(M, p_hat):
    """Coverage-weighted purity ``sqrt(M) * p_hat``."""
    return np.sqrt(M) * p_hat


def select_near_rules(data: Dataset, config: NearRuleConfig, score_threshold: float) -> list[tuple[int, int, float]]:
    """Candidate rules for noisy binary data, as ``(feature, label, score)`` by descending score.

    A (feature, label) pair survives when at least ``min_count_*`` examples of
    that label contain the feature and the label's share among examples
    containing it reaches ``min_prob_*``.  Survivors need a score of at least
    ``score_threshold`` (negative label) or ``positive_factor`` times that
    (positive label).
    """
    if data.m == 0:
        raise DataError("empty dataset")
    Xd = data.dense
    if not np.all((Xd == 0) | (Xd == 1)):
        raise DataError("select_near_rules needs binary {0, 1} features")
    F = (Xd > 0).astype(float)
    M = F.sum(axis=0)
    out = []
    settings = (
        (1, config.min_count_pos, config.min_prob_pos, config.positive_factor * score_threshold),
        (-1, config.min_count_neg, config.min_prob_neg, score_threshold),
    )
    for label, min_count, min_prob, thr in settings:
        count = (data.y == label).astype(float) @ F
        with np.errstate(invalid="ignore", divide="ignore"):
            p_hat = np.where(M > 0, count / M, 0.0)
        score = near_rule_score(M, p_hat)
        ok = (count >= min_count) & (p_hat >= min_prob) & (score >= thr)
        out.extend((int(j), label, float(score[j])) for j in np.nonzero(ok)[0])
    out.sort(key=lambda t: (-t[2], t[0], -t[1]))
    if config.top_k is not None:
        out = out[: config.top_k]
    return out


def candidate_pool(data: Dataset, size: int | None = None, pad: bool = True) -> list[tuple[int, int]]:
    """Rule candidates for dense synthetic data.

    Perfect rules of both polarities first (coverage desc).  With ``pad``, the
    purest non-perfect (feature, label) pairs follow until ``size`` candidates
    are listed.
    """
    if data.m == 0:
        raise DataError("empty dataset")
    F = _fires(data)
    total = F.sum(axis=0)
    perfect = []
    rest = []
    for label in (1, -1):
        agree = (data.y == label).astype(float) @ F
        perfect.extend((j, label, cov) for j, cov in _perfect_from_counts(total, agree))
        with np.errstate(invalid="ignore", divide="ignore"):
            purity = np.where(total > 0, agree / total, 0.0)
        for j in np.nonzero((total > 0) & (agree < total) & (agree > 0))[0]:
            rest.append((int(j), label, float(purity[j]), float(total[j])))
    perfect.sort(key=lambda t: (-t[2], t[0], -t[1]))
    out = [(j, label) for j, label, _ in perfect]
    seen = {j for j, _ in out}
    rest.sort(key=lambda t: (-t[2], -t[3], t[0], -t[1]))
    for j, label, _, _ in rest if pad else ():
        if size is not None and len(out) >= size:
            break
        if j not in seen:
            out.append((j, label))
            seen.add(j)
    if size is not None:
        out = out[:size]
    return out
