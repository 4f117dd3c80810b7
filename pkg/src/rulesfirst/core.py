"""Domain types, losses and prediction semantics shared by every module.

A rules-first model predicts with an ordered list of single-feature rules
when one of them fires (``x[j] > 0``) and falls back to a linear classifier
otherwise.  Feature vectors are sparse; the canonical dataset storage is a
CSR matrix with a cached dense view for the trainers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

NORM_SLACK = 1e-9


class DataError(ValueError):
    """Raised for malformed or unusable datasets."""


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------
#
# Every loss is written against the signed margin z = score * label so the
# rule-fired convention (z = +inf on agreement, -inf on disagreement) falls
# out of ordinary float arithmetic.


def _margin(score, label):
    return np.asarray(score, dtype=float) * np.asarray(label, dtype=float)


def _mis_z(z):
    return (z <= 0).astype(float)


def _hinge_z(z):
    return np.maximum(0.0, 1.0 - z)


def _ramp_z(z):
    return np.clip(1.0 - z, 0.0, 1.0)


def _margin_z(z):
    return (z < 1).astype(float)


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


def loss_mis(score, label):
    """Zero-one loss: 1 iff ``score * label <= 0``."""
    return _scalar_or_array(_mis_z(_margin(score, label)))


def loss_hinge(score, label):
    """``max(0, 1 - score * label)``."""
    return _scalar_or_array(_hinge_z(_margin(score, label)))


def loss_ramp(score, label):
    """``clamp(1 - score * label, 0, 1)``."""
    return _scalar_or_array(_ramp_z(_margin(score, label)))


def loss_margin(score, label):
    """1 iff ``score * label < 1``; a margin of exactly 1 is not penalized."""
    return _scalar_or_array(_margin_z(_margin(score, label)))


LOSSES = {
    "mis": _mis_z,
    "hinge": _hinge_z,
    "ramp": _ramp_z,
    "margin": _margin_z,
}


def sign(scores):
    """Sign with the tie convention ``sign(0) = -1``."""
    return np.where(np.asarray(scores) > 0, 1, -1).astype(np.int8)


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------


def _check_label(label) -> int:
    if label not in (-1, 1):
        raise DataError(f"label must be -1 or +1, got {label!r}")
    return int(label)


@dataclass(frozen=True)
class Example:
    """A labeled sparse feature vector (index -> value)."""

    features: Mapping[int, float]
    label: int

    def __post_init__(self):
        _check_label(self.label)
        feats = {}
        for j, v in dict(self.features).items():
            j = int(j)
            v = float(v)
            if j < 0:
                raise DataError(f"negative feature index {j}")
            if not math.isfinite(v):
                raise DataError(f"non-finite value at feature {j}")
            if v != 0.0:
                feats[j] = v
        object.__setattr__(self, "features", MappingProxyType(dict(sorted(feats.items()))))

    def __getitem__(self, j: int) -> float:
        return self.features.get(j, 0.0)


class Dataset:
    """Immutable labeled dataset of dimension ``d``.

    Stored as a CSR matrix ``X`` (m x d) and an int8 label vector ``y``.
    The dense view is computed lazily and shared.
    """

    def __init__(self, X, y, dimension: int | None = None):
        X = sp.csr_matrix(X, dtype=float)
        X.eliminate_zeros()
        X.sort_indices()
        y = np.asarray(y).reshape(-1)
        if dimension is None:
            dimension = X.shape[1]
        if dimension < 1:
            raise DataError("dimension must be a positive integer")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if X.shape[1] > dimension:
            raise DataError(f"feature index out of range for dimension {dimension}")
        if X.shape[1] < dimension:
            X = sp.csr_matrix((X.data, X.indices, X.indptr), shape=(X.shape[0], dimension))
        if y.size and not np.all((y == 1) | (y == -1)):
            raise DataError("labels must be -1 or +1")
        if not np.all(np.isfinite(X.data)):
            raise DataError("feature values must be finite")
        X.data.setflags(write=False)
        y = y.astype(np.int8)
        y.setflags(write=False)
        self._X = X
        self._y = y

    @classmethod
    def from_examples(cls, examples: Iterable[Example], dimension: int) -> "Dataset":
        rows, cols, vals, labels = [], [], [], []
        for i, ex in enumerate(examples):
            for j, v in ex.features.items():
                if j >= dimension:
                    raise DataError(f"feature index {j} out of range for dimension {dimension}")
                rows.append(i)
                cols.append(j)
                vals.append(v)
            labels.append(ex.label)
        X = sp.csr_matrix((vals, (rows, cols)), shape=(len(labels), dimension), dtype=float)
        return cls(X, np.array(labels, dtype=np.int8), dimension)

    @classmethod
    def empty(cls, dimension: int) -> "Dataset":
        return cls(sp.csr_matrix((0, dimension)), np.zeros(0, dtype=np.int8), dimension)

    @property
    def X(self) -> sp.csr_matrix:
        return self._X

    @property
    def y(self) -> np.ndarray:
        return self._y

    @property
    def dimension(self) -> int:
        return self._X.shape[1]

    @property
    def m(self) -> int:
        return self._X.shape[0]

    def __len__(self) -> int:
        return self.m

    @cached_property
    def dense(self) -> np.ndarray:
        out = self._X.toarray()
        out.setflags(write=False)
        return out

    @property
    def examples(self) -> Iterator[Example]:
        X = self._X
        for i in range(self.m):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            yield Example(dict(zip(X.indices[lo:hi].tolist(), X.data[lo:hi].tolist())), int(self._y[i]))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self._X[idx], self._y[idx], self.dimension)

    def concat(self, other: "Dataset") -> "Dataset":
        if other.dimension != self.dimension:
            raise DataError("dimension mismatch")
        return Dataset(sp.vstack([self._X, other._X]), np.concatenate([self._y, other._y]), self.dimension)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and np.array_equal(self._y, other._y)
            and (self._X != other._X).nnz == 0
        )

    def __repr__(self):
        return f"Dataset(m={self.m}, d={self.dimension}, nnz={self._X.nnz})"


def as_matrix(x, dimension: int | None = None):
    """Coerce a Dataset, Example, mapping, vector or matrix to a 2-D array-like."""
    if isinstance(x, Dataset):
        return x.dense
    if isinstance(x, Example):
        x = x.features
    if isinstance(x, Mapping):
        if dimension is None:
            raise ValueError("dimension required for mapping input")
        row = np.zeros((1, dimension))
        for j, v in x.items():
            row[0, j] = v
        return row
    if sp.issparse(x):
        return x
    arr = np.asarray(x, dtype=float)
    return arr.reshape(1, -1) if arr.ndim == 1 else arr


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    feature: int
    label: int

    def __post_init__(self):
        object.__setattr__(self, "feature", int(self.feature))
        object.__setattr__(self, "label", _check_label(int(self.label)))


class RuleSet(Sequence[Rule]):
    """Ordered, duplicate-free list of single-feature rules.

    A rule ``(j, y*)`` fires on ``x`` iff ``x[j] > 0`` and then predicts ``y*``.
    """

    def __init__(self, rules: Iterable = ()):
        out = []
        seen = set()
        for r in rules:
            r = r if isinstance(r, Rule) else Rule(*r)
            if r.feature < 0:
                raise ValueError(f"negative rule feature {r.feature}")
            if r.feature in seen:
                raise ValueError(f"duplicate rule feature {r.feature}")
            seen.add(r.feature)
            out.append(r)
        self._rules = tuple(out)

    def __getitem__(self, i):
        return self._rules[i]

    def __len__(self):
        return len(self._rules)

    def __eq__(self, other):
        if isinstance(other, RuleSet):
            return self._rules == other._rules
        return NotImplemented

    def __hash__(self):
        return hash(self._rules)

    def __repr__(self):
        return "RuleSet([" + ", ".join(f"({r.feature}, {r.label:+d})" for r in self._rules) + "])"

    @property
    def features(self) -> list[int]:
        return [r.feature for r in self._rules]

    def add(self, rule) -> "RuleSet":
        return RuleSet((*self._rules, rule))

    def first_firing(self, X) -> np.ndarray:
        """Position (into this rule list) of the first firing rule per row, -1 if none."""
        X = as_matrix(X)
        m = X.shape[0]
        if not self._rules:
            return np.full(m, -1, dtype=np.int64)
        cols = X[:, self.features]
        fired = (cols.toarray() if sp.issparse(cols) else np.asarray(cols)) > 0
        pos = np.argmax(fired, axis=1)
        return np.where(fired.any(axis=1), pos, -1).astype(np.int64)

    def covers(self, X) -> np.ndarray:
        return self.first_firing(X) >= 0


class NormKind(str, enum.Enum):
    L2_BALL = "l2_ball"
    L1_BALL = "l1_ball"
    L2_PENALTY = "l2_penalty"
    L1_PENALTY = "l1_penalty"
    # Sum of an l2-ball part and an l1-ball part (convex relaxation baseline).
    L2_L1_BALL = "l2_l1_ball"


@dataclass(frozen=True)
class NormRegime:
    """Norm constraint (``*_BALL``, bound B) or penalty (``*_PENALTY``, strength C).

    ``bound_l1`` is only used by ``L2_L1_BALL``.
    """

    kind: NormKind
    value: float
    bound_l1: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError(f"norm bound / strength must be positive and finite, got {self.value}")
        if self.kind is NormKind.L2_L1_BALL:
            if self.bound_l1 is None or not self.bound_l1 > 0:
                raise ValueError("L2_L1_BALL needs a positive bound_l1")

    @classmethod
    def l2_ball(cls, B):
        return cls(NormKind.L2_BALL, float(B))

    @classmethod
    def l1_ball(cls, B):
        return cls(NormKind.L1_BALL, float(B))

    @classmethod
    def l2_penalty(cls, C):
        return cls(NormKind.L2_PENALTY, float(C))

    @classmethod
    def l1_penalty(cls, C):
        return cls(NormKind.L1_PENALTY, float(C))

    @classmethod
    def l2_l1_ball(cls, B, B1):
        return cls(NormKind.L2_L1_BALL, float(B), float(B1))

    @property
    def is_ball(self) -> bool:
        return self.kind in (NormKind.L2_BALL, NormKind.L1_BALL, NormKind.L2_L1_BALL)

    @property
    def is_penalty(self) -> bool:
        return not self.is_ball


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Score ``margin_scale * (<weights, x> + bias)``; predicts its sign with sign(0) = -1."""

    weights: np.ndarray
    norm_regime: NormRegime
    bias: float = 0.0
    margin_scale: float = 1.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))
        reg = self.norm_regime
        lim = reg.value * (1 + NORM_SLACK)
        if reg.kind is NormKind.L2_BALL and np.linalg.norm(w) > lim:
            raise ValueError(f"||w||_2 = {np.linalg.norm(w):.6g} exceeds B = {reg.value}")
        if reg.kind is NormKind.L1_BALL and np.abs(w).sum() > lim:
            raise ValueError(f"||w||_1 = {np.abs(w).sum():.6g} exceeds B = {reg.value}")
        if reg.kind is NormKind.L2_L1_BALL and np.linalg.norm(w) > (reg.value + reg.bound_l1) * (1 + NORM_SLACK):
            raise ValueError("weights outside the l2 + l1 ball sum")

    @classmethod
    def zeros(cls, dimension: int, norm_regime: NormRegime) -> "LinearModel":
        return cls(np.zeros(dimension), norm_regime)

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, X) -> np.ndarray:
        X = as_matrix(X, self.dimension)
        s = np.asarray(X @ self.weights).reshape(-1) + self.bias
        return self.margin_scale * s

    def predict(self, X) -> np.ndarray:
        return sign(self.decision_function(X))

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (
            self.norm_regime == other.norm_regime
            and self.bias == other.bias
            and self.margin_scale == other.margin_scale
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class RulesFirstModel:
    """Rules take precedence; the linear part handles everything no rule covers."""

    rule_set: RuleSet
    linear: LinearModel
    # Diagnostics from training (e.g. evaluation-loss path); not part of prediction.
    info: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not isinstance(self.rule_set, RuleSet):
            object.__setattr__(self, "rule_set", RuleSet(self.rule_set))
        for r in self.rule_set:
            if r.feature >= self.linear.dimension:
                raise ValueError(f"rule feature {r.feature} outside dimension {self.linear.dimension}")

    @property
    def dimension(self) -> int:
        return self.linear.dimension

    def predict(self, x) -> tuple[int, int | None]:
        """Predict a single example; returns ``(label, firing rule feature or None)``."""
        labels, attribution = self.predict_with_attribution(as_matrix(x, self.dimension))
        j = int(attribution[0])
        return int(labels[0]), (None if j < 0 else j)

    def predict_with_attribution(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized predict. Attribution is the firing rule's feature index, -1 if none."""
        X = as_matrix(X, self.dimension)
        pos = self.rule_set.first_firing(X)
        labels = self.linear.predict(X)
        fired = pos >= 0
        attribution = np.full(labels.shape[0], -1, dtype=np.int64)
        if fired.any():
            rule_labels = np.array([r.label for r in self.rule_set], dtype=np.int8)
            rule_feats = np.array(self.rule_set.features, dtype=np.int64)
            labels = labels.copy()
            labels[fired] = rule_labels[pos[fired]]
            attribution[fired] = rule_feats[pos[fired]]
        return labels, attribution

    def predict_labels(self, X) -> np.ndarray:
        return self.predict_with_attribution(X)[0]

    def signed_margins(self, X, y) -> np.ndarray:
        """``y * score`` with rule-fired rows mapped to +inf (agree) or -inf (disagree)."""
        X = as_matrix(X, self.dimension)
        y = np.asarray(y, dtype=float)
        z = self.linear.decision_function(X) * y
        pos = self.rule_set.first_firing(X)
        fired = pos >= 0
        if fired.any():
            rule_labels = np.array([r.label for r in self.rule_set], dtype=float)
            agree = rule_labels[pos[fired]] * y[fired] > 0
            z[fired] = np.where(agree, np.inf, -np.inf)
        return z


def empirical_loss(model, data: Dataset, loss: str = "mis") -> float:
    """Mean of ``loss`` over ``data`` for a LinearModel, RulesFirstModel or BoostedModel."""
    if data.m == 0:
        raise DataError("empty dataset")
    try:
        fn = LOSSES[loss]
    except KeyError:
        raise ValueError(f"unknown loss {loss!r}; expected one of {sorted(LOSSES)}") from None
    if hasattr(model, "signed_margins"):
        z = model.signed_margins(data.dense, data.y)
    else:
        z = model.decision_function(data.dense) * data.y
    return float(np.mean(fn(z)))


def accuracy(model, data: Dataset) -> float:
    return 1.0 - empirical_loss(model, data, "mis")


def predict(model: RulesFirstModel, x) -> tuple[int, int | None]:
    return model.predict(x)
