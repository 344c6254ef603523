"""Rank scoring and the query pipeline.

A query runs: monetary filter -> embed the request text -> cosine top-M
preselection over the filtered subset -> order by the review-derived rank
score (or the baseline average star rating) -> truncate to top-k. The
rank score of a product is (P - N) * S: its sentiment margin weighted by
how many reviews back it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .catalog import Product
from .embed import EmbeddingIndex, top_k_similar
from .errors import StoreError
from .sentiment import ProductSentimentAggregate

RANKER_LLMRS = "llmrs"
RANKER_BASELINE = "baseline"

STATUS_OK = "ok"
STATUS_NO_BUDGET = "no products within budget"

DEFAULT_TOP_K = 5
DEFAULT_PRESELECT_M = 50


@dataclass
class QueryRequest:
    text: str
    max_price: float | None = None
    max_license_fee: float | None = None
    max_implementation_cost: float | None = None
    max_maintenance_cost: float | None = None
    top_k: int = DEFAULT_TOP_K
    preselect_m: int = DEFAULT_PRESELECT_M
    ranker: str = RANKER_LLMRS

    def validate(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("query text must be non-empty")
        for name in ("max_price", "max_license_fee", "max_implementation_cost",
                     "max_maintenance_cost"):
            bound = getattr(self, name)
            if bound is not None and bound < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.preselect_m < 1:
            raise ValueError("preselect_m must be >= 1")
        if self.ranker not in (RANKER_LLMRS, RANKER_BASELINE):
            raise ValueError(f"unknown ranker {self.ranker!r}")


@dataclass
class Recommendation:
    product_id: str
    description: str
    price: float
    license_fee: float
    implementation_cost: float
    maintenance_cost: float
    similarity: float
    rank_score: float | None = None
    avg_rating: float | None = None

    def as_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class QueryResult:
    status: str
    results: list[Recommendation]
    candidates_considered: int = 0
    excluded_unscored: int = 0

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "results": [r.as_dict() for r in self.results],
            "candidates_considered": self.candidates_considered,
            "excluded_unscored": self.excluded_unscored,
        }


@dataclass
class CompareResult:
    llmrs: QueryResult
    baseline: QueryResult
    only_in_llmrs: list[str] = field(default_factory=list)
    only_in_baseline: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "llmrs": self.llmrs.as_dict(),
            "baseline": self.baseline.as_dict(),
            "only_in_llmrs": self.only_in_llmrs,
            "only_in_baseline": self.only_in_baseline,
        }


def rank_score(agg: ProductSentimentAggregate) -> float:
    """(P - N) * S; negative when reviews skew negative."""
    return (agg.pos_sum - agg.neg_sum) * agg.count


def baseline_avg_rating(ratings: Sequence[int]) -> float | None:
    """Arithmetic mean of the original star ratings; None without any."""
    if not ratings:
        return None
    return sum(ratings) / len(ratings)


def monetary_filter(products: Sequence[Product], request: QueryRequest) -> list[Product]:
    """Keep products whose monetary fields fit every provided bound (inclusive)."""
    bounds = (
        ("price", request.max_price),
        ("license_fee", request.max_license_fee),
        ("implementation_cost", request.max_implementation_cost),
        ("maintenance_cost", request.max_maintenance_cost),
    )
    kept = []
    for p in products:
        if all(limit is None or getattr(p, name) <= limit for name, limit in bounds):
            kept.append(p)
    return kept


def run_query(request: QueryRequest, products: Mapping[str, Product],
              index: EmbeddingIndex, aggregates: Mapping[str, ProductSentimentAggregate],
              avg_ratings: Mapping[str, float], embed_provider) -> QueryResult:
    """Execute the full pipeline for one request.

    Products without scored reviews cannot carry a rank score and are
    excluded (reported via ``excluded_unscored``); likewise unrated
    products in baseline mode. Final ties break by similarity descending,
    then product id ascending.
    """
    request.validate()
    filtered = monetary_filter(list(products.values()), request)
    if not filtered:
        return QueryResult(status=STATUS_NO_BUDGET, results=[])

    sub = index.subset(p.id for p in filtered)
    if len(sub) == 0:
        raise StoreError("no embeddings for any in-budget product; rerun precompute")
    qvec = embed_provider.embed_texts([request.text])[0]
    preselected = top_k_similar(qvec, sub, k=request.preselect_m)

    if request.ranker == RANKER_LLMRS:
        scored = [
            (rank_score(aggregates[pid]), sim, pid)
            for pid, sim in preselected if pid in aggregates
        ]
    else:
        scored = [
            (avg_ratings[pid], sim, pid)
            for pid, sim in preselected if pid in avg_ratings
        ]
    scored.sort(key=lambda t: (-t[0], -t[1], t[2]))

    results = []
    for key, sim, pid in scored[: request.top_k]:
        p = products[pid]
        results.append(Recommendation(
            product_id=pid,
            description=p.description,
            price=p.price,
            license_fee=p.license_fee,
            implementation_cost=p.implementation_cost,
            maintenance_cost=p.maintenance_cost,
            similarity=sim,
            rank_score=key if request.ranker == RANKER_LLMRS else None,
            avg_rating=key if request.ranker == RANKER_BASELINE else None,
        ))
    return QueryResult(
        status=STATUS_OK,
        results=results,
        candidates_considered=len(preselected),
        excluded_unscored=len(preselected) - len(scored),
    )


def compare(request: QueryRequest, products: Mapping[str, Product], index: EmbeddingIndex,
            aggregates: Mapping[str, ProductSentimentAggregate],
            avg_ratings: Mapping[str, float], embed_provider) -> CompareResult:
    """Run both rankers on identical candidates and diff the picks."""
    left = run_query(
        QueryRequest(**{**vars(request), "ranker": RANKER_LLMRS}),
        products, index, aggregates, avg_ratings, embed_provider)
    right = run_query(
        QueryRequest(**{**vars(request), "ranker": RANKER_BASELINE}),
        products, index, aggregates, avg_ratings, embed_provider)
    left_ids = {r.product_id for r in left.results}
    right_ids = {r.product_id for r in right.results}
    return CompareResult(
        llmrs=left,
        baseline=right,
        only_in_llmrs=sorted(left_ids - right_ids),
        only_in_baseline=sorted(right_ids - left_ids),
    )
