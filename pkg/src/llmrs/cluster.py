"""K-means over review TF-IDF rows and the cluster-rate rating scheme.

The estimator is a plain Lloyd loop with k-means++ seeding, written to be
deterministic: a fixed RNG seed, fixed summation order, ties always broken
toward the lowest index. Clusters are rated 1..k by ranking their share of
positive-labeled reviews; the per-product "consistent rating" is the
rounded mean of its reviews' cluster ratings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .errors import FormatError
from .sentiment import SentimentScore
from .vectorize import SparseVector

POSITIVE = "positive"
NEGATIVE = "negative"

# rating given, for aggregation purposes, to reviews whose TF-IDF vector is
# empty (all tokens out of vocabulary) and which therefore were never clustered
UNCLUSTERED_RATING = 3


class _CsrRows:
    """Minimal CSR triple with the few operations Lloyd needs."""

    def __init__(self, indptr: np.ndarray, indices: np.ndarray, data: np.ndarray, dim: int):
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self.dim = dim
        self.n = len(indptr) - 1
        contrib = data * data
        self.row_norms_sq = self._row_sums(contrib)
        self._row_of_nnz = np.repeat(np.arange(self.n), np.diff(indptr))

    @classmethod
    def from_input(cls, X, dim: int | None) -> "_CsrRows":
        if isinstance(X, np.ndarray):
            if X.ndim != 2:
                raise ValueError("dense input must be a 2-d array")
            X = np.asarray(X, dtype=np.float64)
            mask = X != 0.0
            counts = mask.sum(axis=1)
            indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
            indices = np.nonzero(mask)[1].astype(np.int64)
            data = X[mask].astype(np.float64)
            return cls(indptr, indices, data, X.shape[1])
        rows: Sequence[SparseVector] = list(X)
        if dim is None:
            dim = 1 + max((int(r.indices[-1]) for r in rows if r.nnz), default=-1)
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        for i, r in enumerate(rows):
            indptr[i + 1] = indptr[i] + r.nnz
        indices = np.concatenate([r.indices for r in rows]) if rows else np.empty(0, np.int64)
        data = np.concatenate([r.values for r in rows]) if rows else np.empty(0, np.float64)
        return cls(indptr, indices.astype(np.int64), data.astype(np.float64), dim)

    def _row_sums(self, contrib: np.ndarray) -> np.ndarray:
        csum = np.concatenate([[0.0], np.cumsum(contrib)])
        return csum[self.indptr[1:]] - csum[self.indptr[:-1]]

    def dots(self, centroids: np.ndarray) -> np.ndarray:
        """Row-by-centroid inner products, shape (n, k)."""
        out = np.empty((self.n, centroids.shape[0]), dtype=np.float64)
        for j in range(centroids.shape[0]):
            out[:, j] = self._row_sums(self.data * centroids[j, self.indices])
        return out

    def dist_sq(self, centroids: np.ndarray) -> np.ndarray:
        c_norms = np.einsum("ij,ij->i", centroids, centroids)
        d2 = self.row_norms_sq[:, None] - 2.0 * self.dots(centroids) + c_norms[None, :]
        np.maximum(d2, 0.0, out=d2)
        return d2

    def densify(self, i: int) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        out[self.indices[lo:hi]] = self.data[lo:hi]
        return out

    def mean_by_label(self, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        acc = np.zeros((k, self.dim), dtype=np.float64)
        np.add.at(acc, (labels[self._row_of_nnz], self.indices), self.data)
        counts = np.bincount(labels, minlength=k).astype(np.float64)
        nonzero = counts > 0
        acc[nonzero] /= counts[nonzero, None]
        return acc, counts

    def count_distinct(self) -> int:
        seen = set()
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            seen.add((self.indices[lo:hi].tobytes(), self.data[lo:hi].tobytes()))
        return len(seen)


class KMeans(BaseEstimator):
    """Lloyd's algorithm with k-means++ seeding and empty-cluster repair.

    Accepts a dense (n, d) array or a sequence of :class:`SparseVector`
    (pass ``dim`` for sparse input). After ``fit``: ``cluster_centers_``,
    ``labels_``, ``inertia_``, ``n_iter_`` and ``sse_history_`` (the SSE
    after every assignment step, non-increasing by construction).
    """

    def __init__(self, n_clusters: int = 5, random_state: int = 0,
                 max_iter: int = 100, tol: float = 1e-4):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, dim: int | None = None) -> "KMeans":
        k = self.n_clusters
        if k < 1:
            raise ValueError("n_clusters must be >= 1")
        rows = _CsrRows.from_input(X, dim)
        if rows.n < k or rows.count_distinct() < k:
            raise ValueError(
                f"need at least {k} distinct points, got {rows.count_distinct()} among {rows.n}"
            )

        centroids = self._init_plus_plus(rows, k)
        history: list[float] = []
        n_iter = 0
        for _ in range(self.max_iter):
            n_iter += 1
            d2 = rows.dist_sq(centroids)
            labels = np.argmin(d2, axis=1)
            point_d2 = d2[np.arange(rows.n), labels]
            labels, point_d2, centroids = self._repair_empty(
                rows, labels, point_d2, centroids)
            history.append(float(point_d2.sum()))
            new_centroids, _ = rows.mean_by_label(labels, k)
            shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
            centroids = new_centroids
            if shift < self.tol:
                break

        # final assignment so labels are consistent with the final centroids
        d2 = rows.dist_sq(centroids)
        labels = np.argmin(d2, axis=1)
        point_d2 = d2[np.arange(rows.n), labels]
        labels, point_d2, centroids = self._repair_empty(rows, labels, point_d2, centroids)
        history.append(float(point_d2.sum()))

        self.cluster_centers_ = centroids
        self.labels_ = labels
        self.inertia_ = history[-1]
        self.n_iter_ = n_iter
        self.sse_history_ = history
        return self

    def predict(self, X, dim: int | None = None) -> np.ndarray:
        rows = _CsrRows.from_input(X, dim if dim is not None else self.cluster_centers_.shape[1])
        return np.argmin(rows.dist_sq(self.cluster_centers_), axis=1)

    def _init_plus_plus(self, rows: _CsrRows, k: int) -> np.ndarray:
        rng = np.random.default_rng(self.random_state)
        centroids = np.empty((k, rows.dim), dtype=np.float64)
        chosen = {int(rng.integers(rows.n))}
        centroids[0] = rows.densify(next(iter(chosen)))
        d2 = rows.dist_sq(centroids[:1])[:, 0]
        for j in range(1, k):
            total = float(d2.sum())
            if total > 0.0:
                i = int(rng.choice(rows.n, p=d2 / total))
            else:
                i = min(set(range(rows.n)) - chosen)
            chosen.add(i)
            centroids[j] = rows.densify(i)
            d2 = np.minimum(d2, rows.dist_sq(centroids[j : j + 1])[:, 0])
        return centroids

    @staticmethod
    def _repair_empty(rows: _CsrRows, labels: np.ndarray, point_d2: np.ndarray,
                      centroids: np.ndarray):
        """Reseed each empty cluster at the point farthest from its centroid."""
        k = centroids.shape[0]
        counts = np.bincount(labels, minlength=k)
        for j in np.nonzero(counts == 0)[0]:
            i = int(np.argmax(point_d2))
            centroids = centroids.copy()
            centroids[j] = rows.densify(i)
            labels = labels.copy()
            labels[i] = j
            point_d2 = point_d2.copy()
            point_d2[i] = 0.0
        return labels, point_d2, centroids


def label_review(score: SentimentScore) -> str:
    """Positive iff pos > neg; an exact tie counts as negative."""
    return POSITIVE if score.pos > score.neg else NEGATIVE


def cluster_rate(x_p: int, x_n: int) -> float:
    """Share of positive labels in a cluster: x_p / (x_p + x_n)."""
    if x_p < 0 or x_n < 0:
        raise ValueError("label counts must be non-negative")
    total = x_p + x_n
    if total == 0:
        raise ValueError("cluster rate is undefined for an empty cluster")
    return x_p / total


def assign_cluster_ratings(rates: Sequence[float]) -> list[int]:
    """Rank clusters by rate ascending and assign ratings 1..k in rank order.

    Ties are broken by cluster index ascending, so the lower index gets the
    lower rating. Rank-based: any strictly monotone transform of the rates
    yields the same ratings.
    """
    order = sorted(range(len(rates)), key=lambda i: (rates[i], i))
    ratings = [0] * len(rates)
    for rank, idx in enumerate(order):
        ratings[idx] = rank + 1
    return ratings


def consistent_rating(review_ratings: Iterable[float]) -> int | None:
    """Round-half-up mean of a product's review cluster ratings, or None."""
    ratings = list(review_ratings)
    if not ratings:
        return None
    return int(math.floor(sum(ratings) / len(ratings) + 0.5))


@dataclass(frozen=True)
class ClusterStats:
    index: int
    x_p: int
    x_n: int
    rate: float
    rating: int


@dataclass
class ClusterModel:
    """Fitted clustering artifact: assignments plus per-cluster label stats."""

    k: int
    seed: int
    iterations_run: int
    final_sse: float
    per_cluster: list[ClusterStats]
    assignments: dict[str, int]
    centroids: np.ndarray | None = field(default=None, repr=False)

    def rating_of(self, review_id: str) -> int:
        """Cluster rating for a review; unclustered reviews rate as the median."""
        idx = self.assignments.get(review_id)
        if idx is None:
            return UNCLUSTERED_RATING
        return self.per_cluster[idx].rating

    def save(self, path: str | Path) -> None:
        payload = {
            "k": self.k,
            "seed": self.seed,
            "iterations_run": self.iterations_run,
            "final_sse": self.final_sse,
            "per_cluster": [
                {"index": c.index, "x_p": c.x_p, "x_n": c.x_n, "Y": c.rate, "rating": c.rating}
                for c in self.per_cluster
            ],
            "assignments": self.assignments,
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ClusterModel":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read cluster model {path}: {exc}") from exc
        try:
            per_cluster = [
                ClusterStats(c["index"], c["x_p"], c["x_n"], c["Y"], c["rating"])
                for c in sorted(payload["per_cluster"], key=lambda c: c["index"])
            ]
            model = cls(
                k=payload["k"],
                seed=payload["seed"],
                iterations_run=payload["iterations_run"],
                final_sse=payload["final_sse"],
                per_cluster=per_cluster,
                assignments={str(r): int(i) for r, i in payload["assignments"].items()},
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"cluster model {path} is missing field {exc}") from exc
        for rid, idx in model.assignments.items():
            if not 0 <= idx < model.k:
                raise FormatError(f"cluster model {path}: review {rid} assigned to invalid cluster {idx}")
        return model


def build_cluster_model(review_ids: Sequence[str], vectors: Sequence[SparseVector],
                        labels: Mapping[str, str], dim: int, k: int = 5, seed: int = 0,
                        max_iter: int = 100, tol: float = 1e-4) -> ClusterModel:
    """Cluster non-empty review vectors and derive per-cluster ratings.

    ``review_ids`` and ``vectors`` run in parallel; empty vectors are
    excluded from clustering (their reviews keep no assignment).
    ``labels`` maps review_id -> positive/negative.
    """
    kept = [(rid, vec) for rid, vec in zip(review_ids, vectors) if vec.nnz > 0]
    if len(kept) < k:
        raise ValueError(f"need at least {k} non-empty review vectors, got {len(kept)}")
    ids = [rid for rid, _ in kept]
    km = KMeans(n_clusters=k, random_state=seed, max_iter=max_iter, tol=tol)
    km.fit([vec for _, vec in kept], dim=dim)
    assignments = {rid: int(c) for rid, c in zip(ids, km.labels_)}

    pos_counts = [0] * k
    neg_counts = [0] * k
    for rid, idx in assignments.items():
        if labels[rid] == POSITIVE:
            pos_counts[idx] += 1
        else:
            neg_counts[idx] += 1
    rates = [cluster_rate(p, n) for p, n in zip(pos_counts, neg_counts)]
    ratings = assign_cluster_ratings(rates)
    per_cluster = [
        ClusterStats(i, pos_counts[i], neg_counts[i], rates[i], ratings[i]) for i in range(k)
    ]
    return ClusterModel(
        k=k,
        seed=seed,
        iterations_run=km.n_iter_,
        final_sse=km.inertia_,
        per_cluster=per_cluster,
        assignments=assignments,
        centroids=km.cluster_centers_,
    )
