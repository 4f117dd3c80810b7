"""AdaBoost with :func:`greedy_rule` as the weak learner.

GreedyRule consumes plain samples and its coverage threshold counts
examples, so example weights are turned into counts by a weighted
resample of size ``m`` each round.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import DataError, Dataset, RulesFirstModel, as_matrix
from .rules import GreedyConfig, greedy_rule

logger = logging.getLogger(__name__)

__all__ = ["BoostedModel", "boost_rule", "EPS_CLAMP", "MAX_RETRIES"]

EPS_CLAMP = 1e-8
MAX_RETRIES = 3


def _alpha(eps: float) -> float:
    eps = min(max(eps, EPS_CLAMP), 1 - EPS_CLAMP)
    return 0.5 * math.log((1 - eps) / eps)


@dataclass(frozen=True)
class BoostedModel:
    """Weighted vote of rules-first stages; ``sign(0) = -1``."""

    stages: tuple
    rounds: int
    info: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        stages = tuple((model, float(a)) for model, a in self.stages)
        if not stages:
            raise ValueError("a boosted model needs at least one stage")
        for _, a in stages:
            if not math.isfinite(a):
                raise ValueError("stage weights must be finite")
        dims = {model.dimension for model, _ in stages}
        if len(dims) != 1:
            raise ValueError("stages disagree on dimension")
        object.__setattr__(self, "stages", stages)

    @property
    def dimension(self) -> int:
        return self.stages[0][0].dimension

    @property
    def weights(self) -> list[float]:
        return [a for _, a in self.stages]

    def decision_function(self, X) -> np.ndarray:
        X = as_matrix(X, self.dimension)
        total = np.zeros(X.shape[0])
        for model, a in self.stages:
            total += a * model.predict_labels(X)
        return total

    def predict_labels(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) > 0, 1, -1).astype(np.int8)

    def signed_margins(self, X, y) -> np.ndarray:
        # the vote is compared to 0, so any positive margin is a correct call
        return self.decision_function(X) * np.asarray(y, dtype=float)


def boost_rule(data: Dataset, config: GreedyConfig, rounds: int, seed: int = 0) -> BoostedModel:
    """Run up to ``rounds`` boosting rounds over ``greedy_rule`` stages.

    ``info`` records the per-round weighted errors (``"eps"``), the
    exponential-loss bound on training error (``"bound"``), the retry count
    and why boosting stopped.
    """
    if data.m == 0:
        raise DataError("empty dataset")
    if rounds < 1:
        raise ValueError("rounds must be a positive integer")
    rng = np.random.default_rng(seed)
    m = data.m
    X, y = data.dense, data.y
    D = np.full(m, 1.0 / m)
    stages = []
    eps_hist = []
    retries = 0
    stop = "rounds"
    while len(stages) < rounds:
        idx = np.sort(rng.choice(m, size=m, replace=True, p=D))
        model = greedy_rule(data.subset(idx), config)
        wrong = model.predict_labels(X) != y
        eps = float(D[wrong].sum())
        if eps >= 0.5:
            retries += 1
            logger.debug("boost round %d: eps=%.4f, retry %d", len(stages) + 1, eps, retries)
            if retries > MAX_RETRIES:
                stop = "retries"
                break
            continue
        alpha = _alpha(eps)
        stages.append((model, alpha))
        eps_hist.append(min(max(eps, EPS_CLAMP), 1 - EPS_CLAMP))
        if eps <= 0.0:
            stop = "zero_error"
            break
        D = D * np.exp(np.where(wrong, alpha, -alpha))
        D /= D.sum()
    if not stages:
        # every attempt was worse than chance; fall back to an unweighted stage
        stages.append((greedy_rule(data, config), 0.0))
    bound = float(np.prod([2 * math.sqrt(e * (1 - e)) for e in eps_hist])) if eps_hist else 1.0
    info = {"eps": eps_hist, "bound": bound, "retries": retries, "stop": stop}
    return BoostedModel(tuple(stages), rounds, info=info)
