"""Review-text vectorization: tokenizer and a TF-IDF estimator.

The vectorizer follows the sklearn fit/transform convention so it can be
dropped into wider pipelines, but it is deliberately small: raw term
counts weighted by a smoothed idf, L2-normalized rows, lexicographic
vocabulary order so column indices are reproducible across runs.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .errors import FormatError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _load_wordlist(name: str) -> tuple[frozenset[str], str]:
    """Read a shipped word list; returns (words, version string)."""
    text = resources.files("llmrs.data").joinpath(name).read_text(encoding="utf-8")
    version = "unversioned"
    words = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            m = re.search(r"version:\s*(\S+)", line)
            if m:
                version = m.group(1)
            continue
        if line:
            words.append(line)
    return frozenset(words), version


STOPWORDS, STOPWORDS_VERSION = _load_wordlist("stopwords.txt")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop short and stop tokens.

    Tokens shorter than 2 characters are dropped; so is anything on the
    shipped stopword list. Non-ASCII letters are treated as separators.
    """
    tokens = _TOKEN_RE.findall(text.lower())
    return [t for t in tokens if len(t) >= 2 and t not in STOPWORDS]


@dataclass(frozen=True, eq=False)
class SparseVector:
    """One row of the TF-IDF matrix: strictly increasing indices, no zeros."""

    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray   # float64, finite, non-zero

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size and np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        if np.any(~np.isfinite(val)) or np.any(val == 0.0):
            raise ValueError("values must be finite and non-zero")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]


EMPTY_SPARSE = SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))


class TfidfVectorizer(BaseEstimator):
    """TF-IDF with smoothed idf: idf(t) = ln((1 + N) / (1 + df(t))) + 1.

    Parameters
    ----------
    min_df : int
        Keep only terms occurring in at least this many documents.
    max_vocab : int or None
        Cap vocabulary size, keeping the highest-document-frequency terms
        (ties broken lexicographically). None means unlimited.
    tokenizer : callable or None
        Override the default :func:`tokenize`. Used by tests and callers
        with pre-cleaned corpora.
    """

    def __init__(self, min_df: int = 1, max_vocab: int | None = None,
                 tokenizer: Callable[[str], list[str]] | None = None):
        self.min_df = min_df
        self.max_vocab = max_vocab
        self.tokenizer = tokenizer

    def _tokenize(self, text: str) -> list[str]:
        return (self.tokenizer or tokenize)(text)

    def fit(self, docs: Sequence[str]) -> "TfidfVectorizer":
        docs = list(docs)
        if not docs:
            raise ValueError("cannot fit TF-IDF on an empty corpus")
        if self.min_df < 1:
            raise ValueError("min_df must be >= 1")

        df: Counter[str] = Counter()
        for doc in docs:
            df.update(set(self._tokenize(doc)))

        terms = [t for t, c in df.items() if c >= self.min_df]
        if not terms:
            raise ValueError("corpus produced an empty vocabulary")
        if self.max_vocab is not None and len(terms) > self.max_vocab:
            # highest df first, lexicographic among equals, then trim
            terms.sort(key=lambda t: (-df[t], t))
            terms = terms[: self.max_vocab]
        terms.sort()

        n = len(docs)
        self.vocabulary_ = {t: i for i, t in enumerate(terms)}
        self.idf_ = np.array(
            [math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms], dtype=np.float64
        )
        self.num_docs_ = n
        return self

    def transform_one(self, doc: str) -> SparseVector:
        """Map one document to an L2-normalized sparse row.

        Out-of-vocabulary tokens are ignored; a document with no
        vocabulary terms maps to the empty vector.
        """
        if getattr(self, "vocabulary_", None) is None:
            raise ValueError("vectorizer is not fitted")
        counts = Counter(self._tokenize(doc))
        items = sorted(
            (self.vocabulary_[t], c) for t, c in counts.items() if t in self.vocabulary_
        )
        if not items:
            return EMPTY_SPARSE
        idx = np.array([i for i, _ in items], dtype=np.int64)
        weights = np.array([c for _, c in items], dtype=np.float64) * self.idf_[idx]
        weights /= np.linalg.norm(weights)
        return SparseVector(idx, weights)

    def transform(self, docs: Iterable[str]) -> list[SparseVector]:
        return [self.transform_one(d) for d in docs]

    def fit_transform(self, docs: Sequence[str]) -> list[SparseVector]:
        return self.fit(docs).transform(docs)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary_)

    def save(self, path: str | Path) -> None:
        payload = {
            "terms": [
                {"term": t, "index": i, "idf": float(self.idf_[i])}
                for t, i in sorted(self.vocabulary_.items(), key=lambda kv: kv[1])
            ],
            "num_docs": self.num_docs_,
            "min_df": self.min_df,
            "stopword_list_version": STOPWORDS_VERSION,
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TfidfVectorizer":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read TF-IDF model {path}: {exc}") from exc
        for key in ("terms", "num_docs", "min_df"):
            if key not in payload:
                raise FormatError(f"TF-IDF model {path} is missing field {key!r}")
        model = cls(min_df=payload["min_df"])
        terms = sorted(payload["terms"], key=lambda t: t["index"])
        indices = [t["index"] for t in terms]
        if indices != list(range(len(terms))):
            raise FormatError(f"TF-IDF model {path} indices are not a 0..|V|-1 bijection")
        model.vocabulary_ = {t["term"]: t["index"] for t in terms}
        if len(model.vocabulary_) != len(terms):
            raise FormatError(f"TF-IDF model {path} contains duplicate terms")
        model.idf_ = np.array([t["idf"] for t in terms], dtype=np.float64)
        if np.any(model.idf_ <= 0):
            raise FormatError(f"TF-IDF model {path} has non-positive idf weights")
        model.num_docs_ = payload["num_docs"]
        return model
