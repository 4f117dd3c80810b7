"""Synthetic distributions and realizability checks.

``gen_synthetic`` draws Bernoulli rule coordinates followed by Gaussian
standard coordinates; an example is positive whenever a rule coordinate
fires and otherwise labeled by ``sign(<w_star, x>)``.  ``gen_lower_bound``
emits the finite support of the distribution that forces any margin-1
linear separator to have a large norm.  ``gen_conflict`` is a sampled
family in the same spirit with a tunable B, used for sample-size
comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import NORM_SLACK, Dataset, sign

__all__ = [
    "SyntheticSpec",
    "LowerBoundSpec",
    "ConflictSpec",
    "gen_conflict",
    "gen_synthetic",
    "gen_lower_bound",
    "check_kb_realizable",
    "check_weak_realizable",
    "realizability_certificate",
    "rule_indicator_weights",
]


@dataclass(frozen=True)
class SyntheticSpec:
    d_total: int = 420
    k: int = 20
    p_rule: float = 1 / 60
    gauss_mean: float = -0.02
    gauss_var: float = 1.0
    w_star: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.p_rule < 1:
            raise ValueError("p_rule must lie in [0, 1)")
        if not 0 <= self.k < self.d_total:
            raise ValueError("need 0 <= k < d_total")
        if self.gauss_var < 0:
            raise ValueError("gauss_var must be non-negative")
        if self.w_star is not None:
            object.__setattr__(self, "w_star", tuple(float(v) for v in self.w_star))
            if len(self.w_star) not in (self.d_total, self.d_total - self.k):
                raise ValueError("w_star must cover all coordinates or only the standard ones")

    @property
    def rule_features(self) -> list[int]:
        return list(range(self.k))

    def teacher(self) -> np.ndarray:
        """Dense teacher over all ``d_total`` coordinates, zero on the rule ones."""
        w = np.zeros(self.d_total)
        if self.w_star is None:
            w[self.k:] = 1.0
        elif len(self.w_star) == self.d_total:
            w[:] = self.w_star
            w[: self.k] = 0.0
        else:
            w[self.k:] = self.w_star
        return w


@dataclass(frozen=True)
class LowerBoundSpec:
    k: int
    B: int

    def __post_init__(self):
        if self.k < 1 or self.B < 1 or int(self.B) != self.B:
            raise ValueError("need k >= 1 and integer B >= 1")

    @property
    def dimension(self) -> int:
        return self.k + self.B ** 2


@dataclass(frozen=True)
class ConflictSpec:
    """Rules whose covered examples sit on the wrong side of the teacher.

    Coordinates ``0..k-1`` are Bernoulli(``p_rule``) rules.  Coordinate ``k``
    carries the signal ``z`` and the remaining ``d_standard - 1`` coordinates
    are Gaussian noise with total variance ``noise**2``.  Uncovered examples
    have ``|z|`` uniform on ``[1/B, 1]`` and label ``sign(z)``, so the teacher
    ``B * e_k`` has margin at least 1 on them.  Covered examples are positive
    but have ``z`` uniform on ``[-1, -1/2]``, so a plain linear separator
    needs rule weights of order ``B`` each.
    """

    k: int = 5
    B: float = 2.0
    d_standard: int = 100
    p_rule: float = 0.06
    noise: float = 3.0

    def __post_init__(self):
        if self.k < 0 or self.d_standard < 1:
            raise ValueError("need k >= 0 and d_standard >= 1")
        if not self.B >= 1:
            raise ValueError("B must be >= 1")
        if not 0 <= self.p_rule < 1:
            raise ValueError("p_rule must lie in [0, 1)")

    @property
    def dimension(self) -> int:
        return self.k + self.d_standard

    def teacher(self) -> np.ndarray:
        w = np.zeros(self.dimension)
        w[self.k] = self.B
        return w


def gen_conflict(spec: ConflictSpec, m: int, seed) -> Dataset:
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    k, D = spec.k, spec.d_standard
    rules = (rng.random((m, k)) < spec.p_rule).astype(float)
    cov = rules.any(axis=1)
    z = np.where(rng.random(m) < 0.5, 1.0, -1.0) * rng.uniform(1.0 / spec.B, 1.0, size=m)
    z[cov] = -rng.uniform(0.5, 1.0, size=int(cov.sum()))
    noise = rng.normal(scale=spec.noise / math.sqrt(D), size=(m, D - 1))
    X = np.hstack([rules, z[:, None], noise])
    y = np.where(cov | (z > 0), 1, -1)
    return Dataset(X, y, spec.dimension)


def gen_synthetic(spec: SyntheticSpec, m: int, seed: int | None = None) -> Dataset:
    """Draw ``m`` examples; ``seed`` overrides ``spec.seed``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    k, d = spec.k, spec.d_total
    rules = (rng.random((m, k)) < spec.p_rule).astype(float)
    gauss = rng.normal(spec.gauss_mean, math.sqrt(spec.gauss_var), size=(m, d - k))
    X = np.hstack([rules, gauss])
    y = sign(X @ spec.teacher())
    y[rules.any(axis=1)] = 1
    return Dataset(X, y, d)


def gen_lower_bound(spec: LowerBoundSpec) -> Dataset:
    """The ``k + B^2`` support points: ``((e_i + a)/sqrt 2, +1)`` then ``(e_{k+j}, -1)``.

    ``a`` is ``(1/B)`` times the sum of the last ``B^2`` basis vectors.
    """
    k, B = spec.k, int(spec.B)
    d = spec.dimension
    a = np.zeros(d)
    a[k:] = 1.0 / B
    pos = (np.eye(d)[:k] + a) / math.sqrt(2.0)
    neg = np.eye(d)[k:]
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(k), -np.ones(B * B)])
    return Dataset(X, y, d)


def _covered(data: Dataset, kappa) -> np.ndarray:
    kappa = sorted(set(int(j) for j in kappa))
    if not kappa:
        return np.zeros(data.m, dtype=bool)
    return (data.dense[:, kappa] > 0).any(axis=1)


def check_kb_realizable(data: Dataset, kappa, w, B: float) -> bool:
    """Rules in ``kappa`` only fire on positives, and ``w`` (||w||_2 <= B) has margin 1 on the rest."""
    w = np.asarray(w, dtype=float)
    if float(w @ w) > B * B * (1 + NORM_SLACK):
        return False
    if data.m == 0:
        return True
    cov = _covered(data, kappa)
    if np.any(data.y[cov] != 1):
        return False
    rest = ~cov
    margins = data.y[rest] * (data.dense[rest] @ w)
    return bool(np.all(margins >= 1 - 1e-9))


def check_weak_realizable(data: Dataset, w_a, w_b, k: int, B: float) -> bool:
    w_a = np.asarray(w_a, dtype=float)
    w_b = np.asarray(w_b, dtype=float)
    if np.linalg.norm(w_a) > B * (1 + NORM_SLACK):
        return False
    if np.count_nonzero(w_b) > k:
        return False
    if data.m == 0:
        return True
    margins = data.y * (data.dense @ (w_a + w_b))
    return bool(np.all(margins >= 1 - 1e-9))


def rule_indicator_weights(data: Dataset, kappa, w) -> np.ndarray:
    """``lambda * indicator(kappa)`` with the smallest ``lambda`` giving margin 1 on covered rows.

    The returned vector is a valid ``w_b`` for the weak realizability check
    whenever ``(kappa, w)`` certifies (k, B)-realizability and non-covered
    rows have ``x[j] <= 0`` on every rule coordinate.
    """
    w = np.asarray(w, dtype=float)
    kappa = sorted(set(int(j) for j in kappa))
    ind = np.zeros(data.dimension)
    ind[kappa] = 1.0
    cov = _covered(data, kappa)
    if not cov.any():
        return ind * 0.0
    X = data.dense[cov]
    mass = X @ ind
    need = (1.0 - X @ w) / mass
    lam = max(float(need.max()), 0.0) * (1 + 1e-9) + 1e-12
    return lam * ind


def realizability_certificate(data: Dataset, spec: SyntheticSpec):
    """Post-hoc ``(kappa, w, B)`` for a ``gen_synthetic`` sample.

    Rescales the teacher by ``1 / min_margin`` over non-covered rows so
    every such row has margin at least 1; B is the resulting l2 norm.
    Returns ``None`` when some non-covered row has non-positive margin.
    """
    kappa = spec.rule_features
    w = spec.teacher()
    rest = ~_covered(data, kappa)
    if not rest.any():
        return kappa, w, float(np.linalg.norm(w)) or 1.0
    margins = data.y[rest] * (data.dense[rest] @ w)
    gamma = float(margins.min())
    if gamma <= 0:
        return None
    w = w / gamma
    # round-off guard
    while float((data.y[rest] * (data.dense[rest] @ w)).min()) < 1.0:
        w = w * (1 + 1e-12)
    return kappa, w, float(np.linalg.norm(w))
