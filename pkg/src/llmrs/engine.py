"""Store lifecycle: offline build of ranking artifacts and the query-time
engine that serves recommendations from them.

A store directory accumulates, in dependency order:

    products.jsonl / reviews.jsonl / manifest.json   (ingest)
    embeddings.jsonl / sentiments.jsonl              (precompute)
    tfidf.json / clusters.json / aggregates.json     (build)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .catalog import Catalog, CatalogStats, Review, descriptive_stats, load_store
from .cluster import (NEGATIVE, POSITIVE, ClusterModel, build_cluster_model,
                      consistent_rating, label_review)
from .config import EngineConfig
from .embed import (FALLBACK_PROVIDER_NAME, EmbeddingIndex, FallbackEmbedProvider,
                    HttpEmbedProvider, load_embedding_file)
from .errors import FormatError, MisconfigurationError, StoreError
from .rank import CompareResult, QueryRequest, QueryResult, baseline_avg_rating
from .rank import compare as _compare
from .rank import run_query
from .sentiment import ProductSentimentAggregate, SentimentScore, aggregate, load_sentiment_file
from .vectorize import TfidfVectorizer

EMBEDDINGS_FILE = "embeddings.jsonl"
SENTIMENTS_FILE = "sentiments.jsonl"
TFIDF_FILE = "tfidf.json"
CLUSTERS_FILE = "clusters.json"
AGGREGATES_FILE = "aggregates.json"

AGGREGATES_FORMAT = "llmrs-aggregates"
AGGREGATES_VERSION = 1


@dataclass
class BuildReport:
    """What an offline build produced, for operator display."""

    k: int
    seed: int
    iterations_run: int
    final_sse: float
    reviews_scored: int
    reviews_clustered: int
    products_aggregated: int
    per_cluster: list = field(default_factory=list)


def _require(path: Path, hint: str) -> Path:
    if not path.is_file():
        raise StoreError(f"missing {path.name} in store ({hint})")
    return path


def _score_map(store_dir: Path, catalog: Catalog) -> dict[str, SentimentScore]:
    """Sentiment scores for every review in the store, keyed by review id."""
    sentiments = load_sentiment_file(
        _require(store_dir / SENTIMENTS_FILE, "run: llmrs precompute sentiments"))
    missing = [r.review_id for r in catalog.reviews if r.review_id not in sentiments.scores]
    if missing:
        raise StoreError(
            f"sentiments file covers {len(sentiments.scores)} reviews but the store has "
            f"{len(catalog.reviews)}; first missing id: {missing[0]}")
    return sentiments.scores


def build_store(store_dir: str | Path, k: int = 5, seed: int = 42,
                min_df: int = 1, max_vocab: int | None = None) -> BuildReport:
    """Fit the review clustering and product aggregates for a store.

    Requires ingest and sentiment precompute to have run. Deterministic
    for a fixed store + seed.
    """
    store_dir = Path(store_dir)
    catalog = load_store(store_dir)
    if not catalog.reviews:
        raise StoreError("store has no reviews; nothing to build")
    scores = _score_map(store_dir, catalog)

    labels = {r.review_id: label_review(scores[r.review_id]) for r in catalog.reviews}
    texts = [r.text for r in catalog.reviews]
    ids = [r.review_id for r in catalog.reviews]
    vectorizer = TfidfVectorizer(min_df=min_df, max_vocab=max_vocab).fit(texts)
    vectors = vectorizer.transform(texts)
    model = build_cluster_model(ids, vectors, labels, dim=len(vectorizer.vocabulary_),
                                k=k, seed=seed)

    by_product = catalog.reviews_by_product
    products: dict[str, dict] = {}
    for pid, reviews in by_product.items():
        agg = aggregate(pid, [scores[r.review_id] for r in reviews])
        if agg is None:
            continue
        avg = baseline_avg_rating([r.rating for r in reviews])
        consistent = consistent_rating([model.rating_of(r.review_id) for r in reviews])
        products[pid] = {
            "pos_sum": agg.pos_sum,
            "neg_sum": agg.neg_sum,
            "reviews_scored": agg.count,
            "avg_rating": avg,
            "consistent_rating": consistent,
        }

    vectorizer.save(store_dir / TFIDF_FILE)
    model.save(store_dir / CLUSTERS_FILE)
    payload = {
        "format": AGGREGATES_FORMAT,
        "version": AGGREGATES_VERSION,
        "products": products,
    }
    tmp = store_dir / (AGGREGATES_FILE + ".tmp")
    tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    os.replace(tmp, store_dir / AGGREGATES_FILE)

    return BuildReport(
        k=model.k,
        seed=model.seed,
        iterations_run=model.iterations_run,
        final_sse=model.final_sse,
        reviews_scored=len(scores),
        reviews_clustered=len(model.assignments),
        products_aggregated=len(products),
        per_cluster=model.per_cluster,
    )


def load_aggregates(path: str | Path) -> tuple[dict[str, ProductSentimentAggregate],
                                               dict[str, float], dict[str, int]]:
    """Read aggregates.json -> (rank aggregates, avg ratings, consistent ratings)."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if payload.get("format") != AGGREGATES_FORMAT or payload.get("version") != AGGREGATES_VERSION:
        raise FormatError(f"{path} is not a {AGGREGATES_FORMAT} v{AGGREGATES_VERSION} file")
    aggregates: dict[str, ProductSentimentAggregate] = {}
    avg_ratings: dict[str, float] = {}
    consistent_ratings: dict[str, int] = {}
    try:
        for pid, row in payload["products"].items():
            aggregates[pid] = ProductSentimentAggregate(
                product_id=pid,
                pos_sum=float(row["pos_sum"]),
                neg_sum=float(row["neg_sum"]),
                count=int(row["reviews_scored"]),
            )
            if row["avg_rating"] is not None:
                avg_ratings[pid] = float(row["avg_rating"])
            if row["consistent_rating"] is not None:
                consistent_ratings[pid] = int(row["consistent_rating"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed product entry: {exc}") from exc
    return aggregates, avg_ratings, consistent_ratings


@dataclass
class CrosstabReport:
    """Sentiment label vs star rating contingency counts."""

    counts: dict[str, dict[int, int]]

    @property
    def total(self) -> int:
        return sum(n for row in self.counts.values() for n in row.values())

    def as_dict(self) -> dict:
        return {label: {str(r): n for r, n in sorted(row.items())}
                for label, row in sorted(self.counts.items())}


def crosstab(reviews: list[Review], scores: Mapping[str, SentimentScore]) -> CrosstabReport:
    """Count (sentiment label, star rating) pairs over all scored reviews."""
    counts: dict[str, dict[int, int]] = {
        POSITIVE: {r: 0 for r in range(1, 6)},
        NEGATIVE: {r: 0 for r in range(1, 6)},
    }
    for review in reviews:
        score = scores.get(review.review_id)
        if score is None:
            continue
        counts[label_review(score)][review.rating] += 1
    return CrosstabReport(counts=counts)


class Engine:
    """Query-time facade over a fully built store.

    Holds the catalog, embedding index and ranking aggregates in memory;
    the query embedder is resolved lazily so read-only commands (stats,
    crosstab, product lookup) never need provider configuration.
    """

    def __init__(self, catalog: Catalog, index: EmbeddingIndex,
                 aggregates: dict[str, ProductSentimentAggregate],
                 avg_ratings: dict[str, float], consistent_ratings: dict[str, int],
                 config: EngineConfig | None = None, store_dir: Path | None = None):
        self.catalog = catalog
        self.index = index
        self.aggregates = aggregates
        self.avg_ratings = avg_ratings
        self.consistent_ratings = consistent_ratings
        self.config = config or EngineConfig()
        self.store_dir = store_dir
        self._embedder = None

    @classmethod
    def load(cls, store_dir: str | Path, config: EngineConfig | None = None) -> "Engine":
        store_dir = Path(store_dir)
        catalog = load_store(store_dir)
        index = load_embedding_file(
            _require(store_dir / EMBEDDINGS_FILE, "run: llmrs precompute embeddings"))
        aggregates, avg_ratings, consistent_ratings = load_aggregates(
            _require(store_dir / AGGREGATES_FILE, "run: llmrs build"))
        return cls(catalog, index, aggregates, avg_ratings, consistent_ratings,
                   config=config, store_dir=store_dir)

    @property
    def embedder(self):
        """Provider used to embed query text, matched to the index provider."""
        if self._embedder is None:
            if self.index.provider_name == FALLBACK_PROVIDER_NAME:
                self._embedder = FallbackEmbedProvider(dim=self.index.dim)
            elif self.config.embed_endpoint:
                self._embedder = HttpEmbedProvider(
                    self.config.embed_endpoint, dim=self.index.dim,
                    batch_size=self.config.batch_size)
            else:
                raise MisconfigurationError(
                    f"store embeddings came from provider {self.index.provider_name!r}; "
                    "set LLMRS_EMBED_ENDPOINT (or embed_endpoint in the config file) "
                    "so queries embed with the same model")
        return self._embedder

    def query(self, request: QueryRequest) -> QueryResult:
        return run_query(request, self.catalog.products, self.index,
                         self.aggregates, self.avg_ratings, self.embedder)

    def compare(self, request: QueryRequest) -> CompareResult:
        return _compare(request, self.catalog.products, self.index,
                        self.aggregates, self.avg_ratings, self.embedder)

    def stats(self) -> CatalogStats:
        return descriptive_stats(list(self.catalog.products.values()), self.aggregates)

    def crosstab(self) -> CrosstabReport:
        if self.store_dir is None:
            raise StoreError("engine was not loaded from a store directory")
        scores = _score_map(self.store_dir, self.catalog)
        return crosstab(self.catalog.reviews, scores)

    def product(self, product_id: str):
        return self.catalog.products.get(product_id)

    def cluster_model(self) -> ClusterModel:
        if self.store_dir is None:
            raise StoreError("engine was not loaded from a store directory")
        return ClusterModel.load(
            _require(self.store_dir / CLUSTERS_FILE, "run: llmrs build"))
