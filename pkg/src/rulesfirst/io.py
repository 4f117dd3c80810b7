"""Dataset files and model documents.

Dense CSV has a header ``f0,...,f{d-1},label``.  Sparse text holds one
example per line, ``label idx:val idx:val ...`` with 0-based ascending
indices; the writer prepends a ``# dimension d`` comment so trailing empty
columns survive a round trip.  Models are JSON documents; floats go
through ``repr`` so they come back bit-exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .core import DataError, Dataset, LinearModel, NormRegime, Rule, RuleSet, RulesFirstModel

__all__ = [
    "write_dense_csv",
    "read_dense_csv",
    "write_sparse",
    "read_sparse",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "MODEL_SCHEMA",
]

MODEL_SCHEMA = 1


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def write_dense_csv(data: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{j}" for j in range(data.dimension)] + ["label"])
        X = data.dense
        for i in range(data.m):
            w.writerow([_fmt(v) for v in X[i]] + [int(data.y[i])])


def read_dense_csv(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: missing header")
    header = rows[0]
    d = len(header) - 1
    if d < 1 or header[-1] != "label" or header[:-1] != [f"f{j}" for j in range(d)]:
        raise DataError(f"{path}: header must be f0,...,f{{d-1}},label")
    X = np.zeros((len(rows) - 1, d))
    y = np.zeros(len(rows) - 1, dtype=np.int8)
    for i, row in enumerate(rows[1:]):
        lineno = i + 2
        if len(row) != d + 1:
            raise DataError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            X[i] = [float(v) for v in row[:-1]]
            y[i] = int(row[-1])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
        if y[i] not in (-1, 1):
            raise DataError(f"{path}:{lineno}: label must be -1 or +1")
    return Dataset(X, y, d)


def write_sparse(data: Dataset, path) -> None:
    X = data.X
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# dimension {data.dimension}\n")
        for i in range(data.m):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            feats = " ".join(f"{j}:{_fmt(v)}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]))
            label = "+1" if data.y[i] > 0 else "-1"
            fh.write(f"{label} {feats}".rstrip() + "\n")


def read_sparse(path, dimension: int | None = None) -> Dataset:
    """Parse the sparse text format; ``dimension`` overrides the header comment."""
    rows, cols, vals, labels = [], [], [], []
    declared = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "dimension":
                    declared = int(parts[1])
                continue
            tok = line.split()
            try:
                label = int(tok[0])
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad label {tok[0]!r}") from None
            if label not in (-1, 1):
                raise DataError(f"{path}:{lineno}: label must be -1 or +1")
            prev = -1
            for item in tok[1:]:
                try:
                    j, v = item.split(":")
                    j, v = int(j), float(v)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad feature {item!r}") from None
                if j <= prev:
                    raise DataError(f"{path}:{lineno}: indices must be ascending")
                prev = j
                rows.append(len(labels))
                cols.append(j)
                vals.append(v)
            labels.append(label)
    d = dimension or declared or (max(cols) + 1 if cols else 1)
    if cols and max(cols) >= d:
        raise DataError(f"{path}: feature index {max(cols)} out of range for dimension {d}")
    X = sp.csr_matrix((vals, (rows, cols)), shape=(len(labels), d))
    return Dataset(X, np.array(labels, dtype=np.int8), d)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


def _linear_to_dict(lin: LinearModel) -> dict:
    reg = lin.norm_regime
    return {
        "norm_regime": reg.kind.value,
        "value": reg.value,
        "bound_l1": reg.bound_l1,
        "bias": lin.bias,
        "margin_scale": float(lin.margin_scale),
        "weights": [float(v) for v in lin.weights],
    }


def _linear_from_dict(doc: dict) -> LinearModel:
    reg = NormRegime(doc["norm_regime"], doc["value"], doc.get("bound_l1"))
    return LinearModel(np.array(doc["weights"], dtype=float), reg, doc.get("bias", 0.0), doc.get("margin_scale", 1.0))


def model_to_dict(model) -> dict:
    from .boost import BoostedModel

    if isinstance(model, BoostedModel):
        return {
            "schema": MODEL_SCHEMA,
            "type": "boosted",
            "rounds": model.rounds,
            "stages": [{"weight": a, "model": model_to_dict(s)} for s, a in model.stages],
        }
    if isinstance(model, RulesFirstModel):
        doc = {"schema": MODEL_SCHEMA, "type": "rules_first", "rules": [[r.feature, r.label] for r in model.rule_set]}
        doc.update(_linear_to_dict(model.linear))
        return doc
    if isinstance(model, LinearModel):
        doc = {"schema": MODEL_SCHEMA, "type": "linear"}
        doc.update(_linear_to_dict(model))
        return doc
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: dict):
    from .boost import BoostedModel

    kind = doc.get("type")
    if kind == "boosted":
        stages = [(model_from_dict(s["model"]), s["weight"]) for s in doc["stages"]]
        return BoostedModel(tuple(stages), int(doc["rounds"]))
    if kind == "rules_first":
        rules = RuleSet(Rule(int(j), int(lab)) for j, lab in doc["rules"])
        return RulesFirstModel(rules, _linear_from_dict(doc))
    if kind == "linear":
        return _linear_from_dict(doc)
    raise DataError(f"unknown model type {kind!r}")


def save_model(model, path) -> None:
    doc = model_to_dict(model)
    Path(path).write_text(json.dumps(doc, allow_nan=False, indent=1) + "\n", encoding="utf-8")


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a model document ({exc})") from None
    return model_from_dict(doc)
