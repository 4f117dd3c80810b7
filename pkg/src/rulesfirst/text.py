"""Bag-of-words ingestion for labeled short texts.

Documents become binary presence vectors over a vocabulary built in
first-appearance order.  The tokenizer lowercases, drops links, keeps
letters, digits and apostrophes inside words, and splits on whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .core import DataError, Dataset

__all__ = [
    "Vocabulary",
    "NORMALIZERS",
    "identity",
    "strip_suffix",
    "tokenize",
    "build_vocab",
    "vectorize",
    "read_labeled_tsv",
    "write_vocab",
    "read_vocab",
    "bundled_corpus",
]

_URL = re.compile(r"(?:https?://|www\.)\S*")
_NON_WORD = re.compile(r"[^a-z0-9'\s]+")
# apostrophes not flanked by word characters on both sides
_LOOSE_APOS = re.compile(r"(?<![a-z0-9])'|'(?![a-z0-9])")

_SUFFIXES = ("ing", "ed", "s")
_MIN_STEM = 3


def identity(token: str) -> str:
    return token


def strip_suffix(token: str) -> str:
    """Drop one trailing ``ing``/``ed``/``s`` when at least 3 characters remain."""
    for suf in _SUFFIXES:
        if token.endswith(suf) and len(token) - len(suf) >= _MIN_STEM:
            return token[: -len(suf)]
    return token


NORMALIZERS: dict[str, Callable[[str], str]] = {"identity": identity, "suffix": strip_suffix}


def _normalizer(name: str) -> Callable[[str], str]:
    try:
        return NORMALIZERS[name]
    except KeyError:
        raise ValueError(f"unknown normalizer {name!r}; expected one of {sorted(NORMALIZERS)}") from None


def tokenize(text: str, normalizer: str = "identity") -> list[str]:
    norm = _normalizer(normalizer)
    s = _URL.sub(" ", text.lower())
    s = _NON_WORD.sub(" ", s)
    s = _LOOSE_APOS.sub(" ", s)
    return [norm(t) for t in s.split()]


@dataclass
class Vocabulary:
    """Token to feature-index map; once ``frozen``, unknown tokens map to nothing."""

    index: dict = field(default_factory=dict)
    normalizer: str = "identity"
    frozen: bool = False

    def __post_init__(self):
        _normalizer(self.normalizer)
        if sorted(self.index.values()) != list(range(len(self.index))):
            raise ValueError("vocabulary indices must be contiguous from 0")

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token) -> bool:
        return token in self.index

    def get(self, token: str):
        return self.index.get(token)

    def add(self, token: str):
        """Index of ``token``, assigning the next index if new; None when frozen and unknown."""
        j = self.index.get(token)
        if j is None and not self.frozen:
            j = len(self.index)
            self.index[token] = j
        return j

    def freeze(self) -> "Vocabulary":
        self.frozen = True
        return self

    @property
    def tokens(self) -> list[str]:
        out = [""] * len(self.index)
        for t, j in self.index.items():
            out[j] = t
        return out


def build_vocab(docs: Iterable[str], normalizer: str = "identity", freeze: bool = True) -> Vocabulary:
    vocab = Vocabulary(normalizer=normalizer)
    for text in docs:
        for tok in tokenize(text, normalizer):
            vocab.add(tok)
    vocab.frozen = freeze
    return vocab


def vectorize(docs: Sequence[tuple[str, int]], vocab: Vocabulary) -> Dataset:
    """Binary presence features; out-of-vocabulary tokens are ignored."""
    if len(vocab) == 0:
        raise DataError("cannot vectorize with an empty vocabulary")
    indptr = [0]
    indices: list[int] = []
    labels = []
    for text, label in docs:
        feats = {vocab.index[t] for t in tokenize(text, vocab.normalizer) if t in vocab.index}
        indices.extend(sorted(feats))
        indptr.append(len(indices))
        labels.append(label)
    X = sp.csr_matrix(
        (np.ones(len(indices)), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(labels), len(vocab)),
    )
    return Dataset(X, np.array(labels, dtype=np.int8), len(vocab))


def read_labeled_tsv(path) -> list[tuple[str, int]]:
    """Read ``label<TAB>text`` lines (label -1 or +1); blank lines are skipped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            label, sep, text = line.partition("\t")
            if not sep:
                raise DataError(f"{path}:{lineno}: expected label<TAB>text")
            try:
                y = int(label)
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad label {label!r}") from None
            if y not in (-1, 1):
                raise DataError(f"{path}:{lineno}: label must be -1 or +1, got {y}")
            out.append((text, y))
    return out


def write_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for j, tok in enumerate(vocab.tokens):
            fh.write(f"{j}\t{tok}\n")


def read_vocab(path, normalizer: str = "identity") -> Vocabulary:
    index = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            j, sep, tok = line.rstrip("\n").partition("\t")
            if not sep or not j.isdigit():
                raise DataError(f"{path}:{lineno}: expected index<TAB>token")
            index[tok] = int(j)
    return Vocabulary(index, normalizer=normalizer, frozen=True)


def bundled_corpus() -> Path:
    """Path of the miniature sentiment corpus shipped with the package."""
    return Path(str(resources.files("rulesfirst") / "data" / "mini_tweets.tsv"))
