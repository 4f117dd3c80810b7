"""Norm-constrained and penalized linear trainers.

``train_constrained_hinge`` is projected subgradient descent on the mean hinge
loss inside an l2 or l1 ball (no bias, as in the theory).  The penalized
logistic trainer fits ``mean log(1 + exp(-y (w.x + c))) + R(w) / C`` with an
unpenalized bias, using scipy's L-BFGS-B.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .core import NORM_SLACK, DataError, Dataset, LinearModel, NormKind, NormRegime

logger = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "MarginCertificate",
    "project_l2",
    "project_l1",
    "train_constrained_hinge",
    "train_convex_relaxation",
    "train_penalized_logistic",
    "logistic_objective",
    "min_norm_margin_solver",
]


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings shared by the trainers.

    ``eta0`` is the initial step; the hinge trainer uses ``eta0 / sqrt(t + 1)``
    with ``t`` counting epochs.  ``batch_size=None`` means full batch.
    Training stops early once the best objective has improved by less than
    ``tolerance`` over ``patience`` consecutive epochs.
    """

    norm_regime: NormRegime
    max_epochs: int = 200
    eta0: float = 0.5
    seed: int = 0
    tolerance: float = 1e-6
    batch_size: int | None = 64
    patience: int = 10

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not self.eta0 > 0:
            raise ValueError("eta0 must be > 0")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------


def project_l2(v, B: float) -> np.ndarray:
    """Euclidean projection onto ``{w : ||w||_2 <= B}``."""
    if not B > 0:
        raise ValueError(f"B must be positive, got {B}")
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n <= B:
        return v.copy()
    return v * (B / n)


def project_l1(v, B: float) -> np.ndarray:
    """Euclidean projection onto ``{w : ||w||_1 <= B}``.

    Soft-thresholds at the exact level found by sorting absolute values
    (Duchi et al., 2008).
    """
    if not B > 0:
        raise ValueError(f"B must be positive, got {B}")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= B:
        return v.copy()
    u = np.sort(a.ravel())[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u * k > css - B)[0][-1]
    theta = (css[rho] - B) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _projector(regime: NormRegime):
    if regime.kind is NormKind.L2_BALL:
        return lambda w: project_l2(w, regime.value)
    if regime.kind is NormKind.L1_BALL:
        return lambda w: project_l1(w, regime.value)
    raise ValueError(f"not a single-ball regime: {regime.kind.value}")


# ---------------------------------------------------------------------------
# Hinge loss, projected subgradient
# ---------------------------------------------------------------------------


def _mean_hinge(X, y, w):
    return float(np.mean(np.maximum(0.0, 1.0 - y * (X @ w))))


def _check_nonempty(data: Dataset):
    if data.m == 0:
        raise DataError("empty dataset")


def _hinge_descent(X, y, config: TrainConfig, parts):
    """Shared projected-subgradient loop.

    ``parts`` is a list of (initial vector, projector); the model weight is
    their sum and every part takes the same subgradient step, then is
    projected onto its own set.
    """
    m = X.shape[0]
    rng = np.random.default_rng(config.seed)
    ws = [p(np.array(w0, dtype=float)) for w0, p in parts]
    w = sum(ws)
    best_w, best_obj = w.copy(), _mean_hinge(X, y, w)
    history = [best_obj]
    bs = m if config.batch_size is None else min(config.batch_size, m)
    epochs = 0
    for epoch in range(config.max_epochs):
        if best_obj == 0.0:
            break
        eta = config.eta0 / math.sqrt(epoch + 1)
        perm = rng.permutation(m)
        Xp, yp = X[perm], y[perm]
        for lo in range(0, m, bs):
            Xb, yb = Xp[lo:lo + bs], yp[lo:lo + bs]
            active = yb * (Xb @ w) < 1.0
            if not active.any():
                continue
            g = -(yb[active] @ Xb[active]) / Xb.shape[0]
            ws = [p(wi - eta * g) for wi, (_, p) in zip(ws, parts)]
            w = sum(ws)
        epochs = epoch + 1
        obj = _mean_hinge(X, y, w)
        if obj < best_obj:
            best_obj, best_w = obj, w.copy()
        history.append(best_obj)
        if len(history) > config.patience and history[-config.patience - 1] - best_obj < config.tolerance:
            break
    logger.debug("hinge descent: %d epochs, best objective %.6g", epochs, best_obj)
    return best_w, best_obj


def train_constrained_hinge(data: Dataset, config: TrainConfig, init=None) -> LinearModel:
    """Minimize the mean hinge loss subject to an l2 or l1 ball constraint.

    Returns the best iterate seen, never the last one.  Zero bias.
    """
    _check_nonempty(data)
    regime = config.norm_regime
    if regime.kind is NormKind.L2_L1_BALL:
        return train_convex_relaxation(data, config)
    if not regime.is_ball:
        raise ValueError("train_constrained_hinge needs an L2_BALL or L1_BALL regime")
    w0 = np.zeros(data.dimension) if init is None else np.asarray(init, dtype=float)
    w, _ = _hinge_descent(data.dense, data.y.astype(float), config, [(w0, _projector(regime))])
    return LinearModel(w, regime)


def train_convex_relaxation(data: Dataset, config: TrainConfig) -> LinearModel:
    """Hinge minimization over ``w_a + w_b`` with ``||w_a||_2 <= B`` and ``||w_b||_1 <= B1``.

    The l1 ball stands in for the l0 rule-count constraint.  Both parts take
    the same subgradient step and are projected onto their own balls.
    """
    _check_nonempty(data)
    regime = config.norm_regime
    if regime.kind is not NormKind.L2_L1_BALL:
        raise ValueError("train_convex_relaxation needs an L2_L1_BALL regime")
    d = data.dimension
    parts = [
        (np.zeros(d), lambda v: project_l2(v, regime.value)),
        (np.zeros(d), lambda v: project_l1(v, regime.bound_l1)),
    ]
    w, _ = _hinge_descent(data.dense, data.y.astype(float), config, parts)
    return LinearModel(w, regime)


# ---------------------------------------------------------------------------
# Penalized logistic regression
# ---------------------------------------------------------------------------


def _logloss(X, y, w, c):
    return float(np.mean(np.logaddexp(0.0, -y * (X @ w + c))))


def _penalty(kind: NormKind, w, C):
    if kind is NormKind.L2_PENALTY:
        return 0.5 * float(w @ w) / C
    return float(np.abs(w).sum()) / C


def logistic_objective(model: LinearModel, data: Dataset) -> float:
    """Mean logistic loss plus ``R(w) / C`` for a penalized model."""
    reg = model.norm_regime
    if not reg.is_penalty:
        raise ValueError("logistic_objective needs a *_PENALTY regime")
    w = np.asarray(model.weights)
    return _logloss(data.dense, data.y.astype(float), w, model.bias) + _penalty(reg.kind, w, reg.value)


def fit_logistic_arrays(X, y, kind: NormKind, C: float, config: TrainConfig, init=None, col_mask=None):
    """Array-level penalized logistic fit with L-BFGS-B.

    The l1 penalty is handled by splitting ``w = u - v`` with ``u, v >= 0``.
    ``col_mask`` (bool, length d) pins the unmasked weights at zero, which is
    the same as zeroing those columns of ``X``.  Returns ``(w, c, objective)``.
    """
    m, d = X.shape
    y = np.asarray(y, dtype=float)
    lam = 1.0 / C
    w0 = np.zeros(d) if init is None else np.array(init[0], dtype=float)
    c0 = 0.0 if init is None else float(init[1])
    free = np.ones(d, dtype=bool) if col_mask is None else np.asarray(col_mask, dtype=bool)
    w0[~free] = 0.0
    fixed = (0.0, 0.0)

    def loss_grad(w, c):
        s = X @ w + c
        z = -y * s
        f = float(np.mean(np.logaddexp(0.0, z)))
        # d/ds log(1 + e^{-ys}) = -y * sigmoid(-ys)
        r = -y * _sigmoid(z) / m
        return f, X.T @ r, float(r.sum())

    if kind is NormKind.L2_PENALTY:
        def fun(theta):
            w, c = theta[:d], theta[d]
            f, gw, gc = loss_grad(w, c)
            return f + 0.5 * lam * float(w @ w), np.append(gw + lam * w, gc)

        theta0 = np.append(w0, c0)
        bounds = [(None, None) if ok else fixed for ok in free] + [(None, None)]
    else:
        def fun(theta):
            u, v, c = theta[:d], theta[d:2 * d], theta[2 * d]
            f, gw, gc = loss_grad(u - v, c)
            return f + lam * float(u.sum() + v.sum()), np.concatenate([gw + lam, lam - gw, [gc]])

        theta0 = np.concatenate([np.maximum(w0, 0.0), np.maximum(-w0, 0.0), [c0]])
        half = [(0.0, None) if ok else fixed for ok in free]
        bounds = half + half + [(None, None)]

    res = minimize(
        fun, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
        options={"maxiter": config.max_epochs, "ftol": config.tolerance * 1e-3, "gtol": config.tolerance * 10},
    )
    theta = res.x
    if kind is NormKind.L2_PENALTY:
        w, c = theta[:d].copy(), float(theta[d])
    else:
        w, c = theta[:d] - theta[d:2 * d], float(theta[2 * d])
    w[~free] = 0.0
    return w, c, float(res.fun)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_penalized_logistic(data: Dataset, config: TrainConfig, init=None) -> LinearModel:
    """Fit ``mean log(1 + exp(-y (w.x + c))) + R(w) / C`` with unpenalized bias ``c``.

    ``R(w) = ||w||_2^2 / 2`` for L2_PENALTY, ``||w||_1`` for L1_PENALTY.
    ``init`` is an optional ``(weights, bias)`` warm start.
    """
    _check_nonempty(data)
    regime = config.norm_regime
    if not regime.is_penalty:
        raise ValueError("train_penalized_logistic needs an L2_PENALTY or L1_PENALTY regime")
    w, c, _ = fit_logistic_arrays(data.dense, data.y, regime.kind, regime.value, config, init)
    return LinearModel(w, regime, bias=c)


# ---------------------------------------------------------------------------
# Minimum-norm margin oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarginCertificate:
    """A weight vector with its verified minimum margin and norms."""

    weights: np.ndarray
    achieved_min_margin: float
    l1_norm: float
    l2_norm: float

    @classmethod
    def of(cls, w, data: Dataset) -> "MarginCertificate":
        w = np.asarray(w, dtype=float)
        margins = data.y * (data.dense @ w)
        return cls(w, float(margins.min()), float(np.abs(w).sum()), float(np.linalg.norm(w)))


def min_norm_margin_solver(
    data: Dataset,
    norm: str = "l2",
    *,
    iterations: int = 12,
    feasibility: float = 1e-4,
    B_max: float = 1e4,
    config: TrainConfig | None = None,
) -> MarginCertificate:
    """Smallest-norm ``w`` with ``y <w, x> >= 1`` on every example.

    Binary search over the ball radius B; a radius is feasible when the
    constrained hinge trainer reaches mean hinge <= ``feasibility``.  Every
    trained iterate with positive margin is rescaled to margin exactly 1 and
    the smallest such certificate is returned.
    """
    _check_nonempty(data)
    if norm not in ("l1", "l2"):
        raise ValueError(f"norm must be 'l1' or 'l2', got {norm!r}")
    kind = NormKind.L2_BALL if norm == "l2" else NormKind.L1_BALL
    if config is None:
        config = TrainConfig(NormRegime(kind, 1.0), max_epochs=3000, eta0=1.0, batch_size=None, patience=200, tolerance=1e-9)
    X, y = data.dense, data.y.astype(float)

    def norm_of(w):
        return float(np.abs(w).sum()) if norm == "l1" else float(np.linalg.norm(w))

    best: list = [None, math.inf]

    def attempt(B):
        cfg = replace(config, norm_regime=NormRegime(kind, B))
        w, obj = _hinge_descent(X, y, cfg, [(np.zeros(data.dimension), _projector(cfg.norm_regime))])
        gamma = float((y * (X @ w)).min())
        if gamma > 0:
            cand = w / gamma
            # guard the certificate against round-off in the division
            while float((y * (X @ cand)).min()) < 1.0:
                cand = cand * (1.0 + 1e-12)
            if norm_of(cand) < best[1]:
                best[0], best[1] = cand, norm_of(cand)
        return obj <= feasibility

    hi = 1.0
    while not attempt(hi):
        hi *= 2.0
        if hi > B_max:
            break
    if best[0] is None:
        raise DataError("not margin-separable within budget")
    lo = 0.0
    hi = min(hi, best[1])
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if attempt(mid):
            hi = mid
        else:
            lo = mid
    cert = MarginCertificate.of(best[0], data)
    assert cert.achieved_min_margin >= 1.0 - 1e-6
    return cert
