"""Command-line experiment harness.

Every experiment subcommand writes a CSV and, next to it, a
``<out>.manifest.json`` holding the resolved configuration, the CSV schema
version and columns, and wall-clock timings.  Timings stay out of the CSV
so reruns with the same seed are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boost import boost_rule
from .core import DataError, Dataset, NormRegime, accuracy
from .datagen import (
    ConflictSpec,
    LowerBoundSpec,
    SyntheticSpec,
    gen_conflict,
    gen_lower_bound,
    gen_synthetic,
)
from .io import load_model, read_dense_csv, read_sparse, save_model, write_dense_csv, write_sparse
from .linear import TrainConfig, train_constrained_hinge, train_convex_relaxation, train_penalized_logistic
from .rules import (
    GreedyConfig,
    NearRuleConfig,
    candidate_pool,
    greedy_eval_loss,
    greedy_eval_path,
    greedy_rule,
    refit_rules_first,
    select_near_rules,
)
from .text import build_vocab, bundled_corpus, read_labeled_tsv, vectorize

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TEST_SIZE = 2000

CURVE_METHODS = ("l1", "l2", "greedy_l1", "greedy_l2")
THRESHOLD_METHODS = ("l1", "l2", "greedy_l1", "greedy_l2")
TABLE1_METHODS = ("greedy_rule", "boost_rule", "convex")
TRAIN_METHODS = ("l1", "l2", "hinge_l1", "hinge_l2", "greedy_rule", "boost_rule")

CURVE_COLUMNS = ["row_type", "method", "m", "trial", "accuracy", "stderr", "n_rules"]
KAPPA_COLUMNS = ["row_type", "budget", "m", "trial", "accuracy", "stderr", "n_rules"]
THRESHOLD_COLUMNS = ["row_type", "method", "threshold", "trial", "accuracy", "stderr", "n_candidates", "n_rules"]
TABLE1_COLUMNS = ["method", "k", "B", "epsilon", "status", "m_needed", "test_error", "trials"]
EVAL_COLUMNS = ["metric", "value"]
ATTRIBUTION_COLUMNS = ["doc", "label", "greedy", "baseline", "rule_token", "text"]

DEFAULT_THRESHOLDS = (0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0)
DEFAULT_THRESHOLD = 2.0
B1_GRID = (1, 2, 4, 8, 16, 32, 64)


class ConfigError(Exception):
    pass


@dataclass
class ExperimentRecord:
    method: str
    params: dict
    accuracy: float
    rules: list = field(default_factory=list)
    wall_time: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _write_csv(path, columns, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    text = buf.getvalue()
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _write_manifest(out, command: str, config: dict, columns, timings: dict, extra=None) -> None:
    if out is None:
        return
    doc = {
        "command": command,
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "columns": list(columns),
        "config": config,
        "timings": timings,
    }
    if extra:
        doc.update(extra)
    Path(str(out) + ".manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _seed(*parts) -> np.random.SeedSequence:
    if any(int(p) < 0 for p in parts):
        raise ConfigError("seeds must be non-negative")
    return np.random.SeedSequence([int(p) for p in parts])


def _int_seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1)[0])


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def _check_methods(methods, valid) -> list[str]:
    methods = list(methods)
    bad = [mm for mm in methods if mm not in valid]
    if bad:
        raise ConfigError(f"unknown method(s) {', '.join(bad)}; valid methods: {', '.join(valid)}")
    if not methods:
        raise ConfigError(f"no methods given; valid methods: {', '.join(valid)}")
    # canonical order keeps the CSV independent of how methods were listed
    return [mm for mm in valid if mm in methods]


def _penalty(kind: str, C: float) -> TrainConfig:
    return TrainConfig(NormRegime.l1_penalty(C) if kind == "l1" else NormRegime.l2_penalty(C))


def _split(data: Dataset):
    """First 2m/3 rows for training, the rest for evaluation."""
    cut = (2 * data.m) // 3
    return data.subset(np.arange(cut)), data.subset(np.arange(cut, data.m))


def _aggregate(records, keys, value="accuracy"):
    groups: dict = {}
    for r in records:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for key, rs in groups.items():
        mean, se = _mean_se([r[value] for r in rs])
        row = dict(zip(keys, key))
        row.update({"row_type": "aggregate", value: mean, "stderr": se})
        if "n_rules" in rs[0]:
            row["n_rules"] = float(np.mean([r["n_rules"] for r in rs]))
        if "n_candidates" in rs[0]:
            row["n_candidates"] = float(np.mean([r["n_candidates"] for r in rs]))
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _fit_curve_method(method: str, train: Dataset, C: float, budget: int):
    kind = method[-2:]
    cfg = _penalty(kind, C)
    if not method.startswith("greedy_"):
        model = train_penalized_logistic(train, cfg)
        return model, []
    a, b = _split(train)
    cands = candidate_pool(a, pad=False)
    model = greedy_eval_loss(a, b, cands, budget, cfg, stop="never")
    return model, [r.feature for r in model.rule_set]


def run_learning_curve(spec: SyntheticSpec, methods, m_grid, trials: int, *, seed=0, C=None, budget=None):
    """Test accuracy per (method, m, trial) plus per-(method, m) mean and standard error.

    All methods see the same training and test sample for a given (m, trial).
    Greedy methods select rules on 2m/3 rows, score them on the other m/3,
    and refit on all m.  ``C`` defaults to m; ``budget`` to ``spec.k``.
    """
    methods = _check_methods(methods, CURVE_METHODS)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    budget = spec.k if budget is None else budget
    records = []
    for m in sorted(set(int(v) for v in m_grid)):
        if m < 3:
            raise ConfigError("m must be >= 3")
        for t in range(trials):
            s_train, s_test = _seed(seed, m, t).spawn(2)
            train = gen_synthetic(spec, m, seed=s_train)
            test = gen_synthetic(spec, TEST_SIZE, seed=s_test)
            for method in methods:
                model, rules = _fit_curve_method(method, train, float(C or m), budget)
                records.append({
                    "row_type": "record", "method": method, "m": m, "trial": t,
                    "accuracy": accuracy(model, test), "n_rules": len(rules),
                })
    rows = records + _aggregate(records, ["method", "m"])
    rows.sort(key=lambda r: (r["method"], r["m"], r["row_type"] != "record", r.get("trial", -1)))
    return rows


def run_kappa_sweep(spec: SyntheticSpec, kappa_grid, m: int, trials: int, *, seed=0, C=None, kind="l2", extra=10):
    """Accuracy as a function of the greedy rule budget.

    Per trial one forced selection path of length ``max(kappa_grid)`` is
    grown on 2m/3 rows from a candidate pool padded ``extra`` past that
    length; each budget's prefix is then refit on all m rows.
    """
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    grid = sorted(set(int(v) for v in kappa_grid))
    if not grid or grid[0] < 0:
        raise ConfigError("kappa grid must be non-empty and non-negative")
    cfg = _penalty(kind, float(C or m))
    top = grid[-1]
    records = []
    for t in range(trials):
        s_train, s_test = _seed(seed, m, t).spawn(2)
        data = gen_synthetic(spec, m, seed=s_train)
        test = gen_synthetic(spec, TEST_SIZE, seed=s_test)
        a, b = _split(data)
        path = greedy_eval_path(a, b, candidate_pool(a, top + extra), top, cfg, stop="never")
        rules = [p["rule"] for p in path[1:]]
        for budget in grid:
            model = refit_rules_first(data, rules[:budget], cfg)
            records.append({
                "row_type": "record", "budget": budget, "m": m, "trial": t,
                "accuracy": accuracy(model, test), "n_rules": len(model.rule_set),
            })
    rows = records + _aggregate(records, ["budget", "m"])
    rows.sort(key=lambda r: (r["budget"], r["row_type"] != "record", r.get("trial", -1)))
    return rows


def _corpus_split(docs, seed, trial):
    rng = np.random.default_rng(_seed(seed, len(docs), trial))
    perm = rng.permutation(len(docs))
    n = len(docs)
    n_train, n_eval = n // 2, n // 6
    pick = lambda idx: [docs[i] for i in idx]  # noqa: E731
    return pick(perm[:n_train]), pick(perm[n_train:n_train + n_eval]), pick(perm[n_train + n_eval:]), perm


def run_threshold_sweep(corpus, thresholds, methods, *, seed=0, trials=1, C=None, normalizer="suffix",
                        near=None, attribution=None, attribution_threshold=DEFAULT_THRESHOLD):
    """Accuracy of greedy and baseline models across near-rule thresholds.

    The corpus is shuffled and split 1/2 train, 1/6 evaluation, 1/3 test.
    The vocabulary covers train plus evaluation.  Greedy models take the
    near-rule candidates of the training split and select among them by
    evaluation error; baselines fit the same penalty on train plus eval.
    With ``attribution`` set, returns also the per-document predictions of
    the first trial at ``attribution_threshold``.
    """
    methods = _check_methods(methods, THRESHOLD_METHODS)
    docs = read_labeled_tsv(corpus)
    if len(docs) < 6:
        raise DataError(f"{corpus}: too few documents")
    near = near or NearRuleConfig()
    grid = sorted(set(float(v) for v in thresholds))
    if not grid:
        raise ConfigError("threshold grid must be non-empty")
    records = []
    dump = []
    for t in range(trials):
        tr, ev, te, perm = _corpus_split(docs, seed, t)
        vocab = build_vocab([text for text, _ in tr + ev], normalizer=normalizer)
        a, b, test = vectorize(tr, vocab), vectorize(ev, vocab), vectorize(te, vocab)
        ab = a.concat(b)
        tokens = vocab.tokens
        for kind in ("l1", "l2"):
            want_base, want_greedy = kind in methods, f"greedy_{kind}" in methods
            if not (want_base or want_greedy):
                continue
            cfg = _penalty(kind, float(C or ab.m))
            base = train_penalized_logistic(ab, cfg)
            base_acc = accuracy(base, test)
            for thr in grid:
                if want_base:
                    records.append({
                        "row_type": "record", "method": kind, "threshold": thr, "trial": t,
                        "accuracy": base_acc, "n_candidates": 0, "n_rules": 0,
                    })
                if not want_greedy:
                    continue
                cands = select_near_rules(a, near, thr)
                model = greedy_eval_loss(a, b, [(j, lab) for j, lab, _ in cands], len(cands), cfg)
                records.append({
                    "row_type": "record", "method": f"greedy_{kind}", "threshold": thr, "trial": t,
                    "accuracy": accuracy(model, test), "n_candidates": len(cands), "n_rules": len(model.rule_set),
                })
                if attribution is not None and t == 0 and thr == float(attribution_threshold):
                    labels, attr = model.predict_with_attribution(test)
                    base_pred = base.predict(test)
                    for i in range(test.m):
                        dump.append({
                            "method": f"greedy_{kind}",
                            "doc": int(perm[len(tr) + len(ev) + i]),
                            "label": int(test.y[i]),
                            "greedy": int(labels[i]),
                            "baseline": int(base_pred[i]),
                            "rule_token": tokens[attr[i]] if attr[i] >= 0 else "",
                            "text": te[i][0],
                        })
    rows = records + _aggregate(records, ["method", "threshold"])
    rows.sort(key=lambda r: (r["method"], r["threshold"], r["row_type"] != "record", r.get("trial", -1)))
    return rows, dump


def _convex_fit(train: Dataset, B: float):
    """Convex relaxation with the l1 radius picked on a 2/3 : 1/3 split."""
    a, b = _split(train)
    best = None
    for B1 in B1_GRID:
        if a.m == 0 or b.m == 0:
            break
        err = 1 - accuracy(train_convex_relaxation(a, TrainConfig(NormRegime.l2_l1_ball(B, B1))), b)
        if best is None or err < best[0]:
            best = (err, B1)
    B1 = best[1] if best else B1_GRID[-1]
    return train_convex_relaxation(train, TrainConfig(NormRegime.l2_l1_ball(B, B1)))


def _table1_fit(method, train: Dataset, k: int, B: float, seed: int):
    if method == "greedy_rule":
        return greedy_rule(train, GreedyConfig(k=k, B=B))
    if method == "boost_rule":
        return boost_rule(train, GreedyConfig(k=k, B=B), rounds=20, seed=seed)
    return _convex_fit(train, B)


def run_table1_comparison(k_grid, B_grid, trials: int, methods=TABLE1_METHODS, *, seed=0, epsilon=0.1,
                          m_min=8, m_max=4096, rel_tol=0.05, test_size=1000, family=None):
    """Smallest m whose mean test error over ``trials`` is at most ``epsilon``.

    Doubles m from ``m_min`` until the error target is met, then bisects
    until the bracket is within ``rel_tol`` of its lower end.  A search that
    passes ``m_max`` is reported UNREACHED.  Data come from ``gen_conflict``;
    each trial keeps its test set fixed across m.
    """
    methods = _check_methods(methods, TABLE1_METHODS)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if not list(k_grid) or not list(B_grid):
        raise ConfigError("k and B grids must be non-empty")
    family = family or {}
    rows = []
    for method in methods:
        for k in sorted(set(int(v) for v in k_grid)):
            for B in sorted(set(float(v) for v in B_grid)):
                spec = ConflictSpec(k=k, B=B, **family)
                tests = [gen_conflict(spec, test_size, _seed(seed, k, round(B * 1000), t, 1)) for t in range(trials)]
                cache = {}

                def err(m):
                    if m not in cache:
                        e = []
                        for t in range(trials):
                            ss = _seed(seed, k, round(B * 1000), t, 0, m)
                            train = gen_conflict(spec, m, ss)
                            e.append(1 - accuracy(_table1_fit(method, train, k, B, _int_seed(ss)), tests[t]))
                        cache[m] = float(np.mean(e))
                    return cache[m]

                lo, hi = None, m_min
                while err(hi) > epsilon and hi <= m_max:
                    lo, hi = hi, hi * 2
                if hi > m_max:
                    rows.append({"method": method, "k": k, "B": B, "epsilon": epsilon, "status": "UNREACHED",
                                 "m_needed": None, "test_error": err(lo), "trials": trials})
                    continue
                lo = lo or 0
                while hi - lo > max(1, int(rel_tol * lo)):
                    mid = (lo + hi) // 2
                    if mid < 1:
                        break
                    if err(mid) <= epsilon:
                        hi = mid
                    else:
                        lo = mid
                rows.append({"method": method, "k": k, "B": B, "epsilon": epsilon, "status": "REACHED",
                             "m_needed": hi, "test_error": err(hi), "trials": trials})
    return rows


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _parse_list(value, cast=float):
    """Accept ``[..]`` lists, comma lists and inclusive ``a..b`` integer ranges."""
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        items = []
        for v in value:
            items.extend(_parse_list(v, cast) if isinstance(v, str) else [cast(v)])
        return items
    if isinstance(value, (int, float)):
        return [cast(value)]
    out = []
    for part in str(value).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            a, b = part.split("..")
            out.extend(cast(v) for v in range(int(a), int(b) + 1))
        else:
            out.append(cast(part))
    return out


def _list_arg(cfg, key, cast, default):
    try:
        v = _parse_list(cfg.get(key), cast)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None
    return default if v is None else v


def _scalar(cfg, key, cast, default):
    v = cfg.get(key)
    if v is None:
        return default
    try:
        return cast(v)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {v!r}") from None


FLAG_KEYS = ("seed", "out", "trials", "m", "k", "B", "C", "budget", "method", "d", "threshold", "corpus",
             "data", "model", "rounds", "format", "attribution", "epsilon")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with the same keys as the flags; flags win")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (CSV, dataset or model); stdout when omitted for CSVs")
    common.add_argument("--trials", type=int)
    common.add_argument("--m", help="sample size or comma list / a..b range")
    common.add_argument("--k", help="rule count or list")
    common.add_argument("--B", help="norm bound or list")
    common.add_argument("--C", type=float, help="inverse regularization strength (default: training size)")
    common.add_argument("--budget", help="rule budget or list / range")
    common.add_argument("--method", help="method name or comma list")
    common.add_argument("--d", type=int, help="total dimension for synthetic data")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rulesfirst", description="Rules-first classifiers: data, training and sweeps.")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a dataset")
    gsub = gen.add_subparsers(dest="family", required=True)
    for name in ("synthetic", "lowerbound"):
        g = gsub.add_parser(name, parents=[common])
        g.add_argument("--format", choices=("dense", "sparse"))

    tr = sub.add_parser("train", parents=[common], help="fit a model on a dataset file")
    tr.add_argument("--data")
    tr.add_argument("--rounds", type=int)

    ev = sub.add_parser("eval", parents=[common], help="losses of a saved model on a dataset file")
    ev.add_argument("--model")
    ev.add_argument("--data")

    sub.add_parser("curve", parents=[common], help="accuracy vs training-set size")
    sub.add_parser("kappa", parents=[common], help="accuracy vs rule budget")
    th = sub.add_parser("threshold", parents=[common], help="accuracy vs near-rule threshold on a text corpus")
    th.add_argument("--corpus")
    th.add_argument("--threshold", help="threshold grid")
    th.add_argument("--attribution", help="TSV path for the per-document attribution dump")
    t1 = sub.add_parser("table1", parents=[common], help="sample size to reach a target error")
    t1.add_argument("--epsilon", type=float)
    return p


def _resolve(args) -> dict:
    cfg = {}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(FLAG_KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    for key in FLAG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def _load_data(path) -> Dataset:
    if path is None:
        raise ConfigError("--data is required")
    p = Path(path)
    if not p.exists():
        raise DataError(f"{path}: no such file")
    return read_dense_csv(p) if p.suffix == ".csv" else read_sparse(p)


def _synthetic_spec(cfg) -> SyntheticSpec:
    k = _scalar(cfg, "k", int, 20)
    d = _scalar(cfg, "d", int, 400 + k)
    try:
        return SyntheticSpec(d_total=d, k=k)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _cmd_gen(args, cfg):
    seed = _scalar(cfg, "seed", int, 0)
    fmt = cfg.get("format") or "dense"
    if args.family == "synthetic":
        spec = _synthetic_spec(cfg)
        m = _scalar(cfg, "m", int, 1000)
        data = gen_synthetic(spec, m, seed=seed)
    else:
        try:
            spec = LowerBoundSpec(_scalar(cfg, "k", int, 2), _scalar(cfg, "B", int, 2))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        data = gen_lower_bound(spec)
    out = cfg.get("out")
    if out is None:
        raise ConfigError("--out is required for gen")
    (write_dense_csv if fmt == "dense" else write_sparse)(data, out)
    cols = [f"f{j}" for j in range(data.dimension)] + ["label"] if fmt == "dense" else ["label", "idx:val"]
    return cfg, cols, {"m": data.m, "dimension": data.dimension}


def _cmd_train(args, cfg):
    data = _load_data(cfg.get("data"))
    method = cfg.get("method") or "greedy_rule"
    _check_methods([method], TRAIN_METHODS)
    C = _scalar(cfg, "C", float, float(data.m))
    B = _scalar(cfg, "B", float, None)
    k = _scalar(cfg, "k", int, None)
    seed = _scalar(cfg, "seed", int, 0)
    if method in ("l1", "l2"):
        model = train_penalized_logistic(data, _penalty(method, C))
    elif method.startswith("hinge_"):
        if B is None:
            raise ConfigError("--B is required for hinge methods")
        reg = NormRegime.l2_ball(B) if method == "hinge_l2" else NormRegime.l1_ball(B)
        model = train_constrained_hinge(data, TrainConfig(reg, seed=seed))
    else:
        if B is None or k is None:
            raise ConfigError("--k and --B are required for greedy_rule and boost_rule")
        gcfg = GreedyConfig(k=k, B=B)
        if method == "greedy_rule":
            model = greedy_rule(data, gcfg)
        else:
            model = boost_rule(data, gcfg, rounds=_scalar(cfg, "rounds", int, 20), seed=seed)
    out = cfg.get("out")
    if out is None:
        raise ConfigError("--out is required for train")
    save_model(model, out)
    return cfg, [], {"train_accuracy": accuracy(model, data)}


def _cmd_eval(args, cfg):
    from .core import empirical_loss

    if cfg.get("model") is None:
        raise ConfigError("--model is required")
    if not Path(cfg["model"]).exists():
        raise DataError(f"{cfg['model']}: no such file")
    model = load_model(cfg["model"])
    data = _load_data(cfg.get("data"))
    if data.dimension != model.dimension:
        raise DataError(f"model dimension {model.dimension} does not match data dimension {data.dimension}")
    rows = [{"metric": name, "value": empirical_loss(model, data, name)} for name in ("mis", "ramp", "hinge", "margin")]
    rows.append({"metric": "accuracy", "value": accuracy(model, data)})
    rows.append({"metric": "m", "value": data.m})
    _write_csv(cfg.get("out"), EVAL_COLUMNS, rows)
    return cfg, EVAL_COLUMNS, {}


def _cmd_curve(args, cfg):
    spec = _synthetic_spec(cfg)
    rows = run_learning_curve(
        spec,
        _list_arg(cfg, "method", str, ["l2", "greedy_l2"]),
        _list_arg(cfg, "m", int, [300, 600, 1200, 2400]),
        _scalar(cfg, "trials", int, 20),
        seed=_scalar(cfg, "seed", int, 0),
        C=_scalar(cfg, "C", float, None),
        budget=_scalar(cfg, "budget", int, None),
    )
    _write_csv(cfg.get("out"), CURVE_COLUMNS, rows)
    return cfg, CURVE_COLUMNS, {}


def _cmd_kappa(args, cfg):
    spec = _synthetic_spec(cfg)
    kind = cfg.get("method") or "l2"
    if kind not in ("l1", "l2"):
        raise ConfigError(f"unknown method {kind}; valid methods: l1, l2")
    rows = run_kappa_sweep(
        spec,
        _list_arg(cfg, "budget", int, list(range(31))),
        _scalar(cfg, "m", int, 1500),
        _scalar(cfg, "trials", int, 20),
        seed=_scalar(cfg, "seed", int, 0),
        C=_scalar(cfg, "C", float, None),
        kind=kind,
    )
    _write_csv(cfg.get("out"), KAPPA_COLUMNS, rows)
    return cfg, KAPPA_COLUMNS, {}


def _cmd_threshold(args, cfg):
    corpus = cfg.get("corpus") or str(bundled_corpus())
    if not Path(corpus).exists():
        raise DataError(f"{corpus}: no such file")
    attribution = cfg.get("attribution")
    rows, dump = run_threshold_sweep(
        corpus,
        _list_arg(cfg, "threshold", float, list(DEFAULT_THRESHOLDS)),
        _list_arg(cfg, "method", str, ["l2", "greedy_l2"]),
        seed=_scalar(cfg, "seed", int, 0),
        trials=_scalar(cfg, "trials", int, 1),
        C=_scalar(cfg, "C", float, None),
        attribution=attribution,
    )
    _write_csv(cfg.get("out"), THRESHOLD_COLUMNS, rows)
    if attribution:
        write_attribution(dump, attribution)
    return cfg, THRESHOLD_COLUMNS, {}


def write_attribution(dump, path) -> None:
    """Tab-separated per-document predictions; ``rule_token`` is empty when the linear part decided."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["method"] + ATTRIBUTION_COLUMNS)
        for r in dump:
            w.writerow([r["method"]] + [r[c] for c in ATTRIBUTION_COLUMNS])


def _cmd_table1(args, cfg):
    rows = run_table1_comparison(
        _list_arg(cfg, "k", int, [5]),
        _list_arg(cfg, "B", float, [2.0, 4.0]),
        _scalar(cfg, "trials", int, 20),
        _list_arg(cfg, "method", str, list(TABLE1_METHODS)),
        seed=_scalar(cfg, "seed", int, 0),
        epsilon=_scalar(cfg, "epsilon", float, 0.1),
    )
    _write_csv(cfg.get("out"), TABLE1_COLUMNS, rows)
    return cfg, TABLE1_COLUMNS, {}


COMMANDS = {
    "gen": _cmd_gen,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "curve": _cmd_curve,
    "kappa": _cmd_kappa,
    "threshold": _cmd_threshold,
    "table1": _cmd_table1,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        t0 = time.perf_counter()
        cfg, columns, extra = COMMANDS[args.command](args, cfg)
        timings = {"wall_seconds": round(time.perf_counter() - t0, 3)}
        command = args.command if args.command != "gen" else f"gen {args.family}"
        _write_manifest(cfg.get("out"), command, cfg, columns, timings, extra)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        # invalid parameter combinations surface as ValueError from the model types
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
