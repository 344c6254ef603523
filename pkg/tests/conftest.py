"""Shared fixtures: synthetic raw dumps, a fully built store, CLI runner."""

from __future__ import annotations

import contextlib
import io
import json
from pathlib import Path

import pytest

from llmrs.catalog import ingest, simulate_costs, write_store
from llmrs.cli import main as cli_main
from llmrs.embed import FallbackEmbedProvider, precompute_embeddings
from llmrs.engine import EMBEDDINGS_FILE, SENTIMENTS_FILE, build_store
from llmrs.sentiment import LexiconSentimentProvider, lexicon_score, write_sentiment_file

# Two products engineered so the review-aware ranking and the star-average
# baseline provably disagree: HERO has 100 uniformly positive reviews all
# rated 4 (huge sentiment-margin score, avg 4.0), ONE_FIVE has a single
# 5-star review whose text is sentiment-neutral (margin 0, avg 5.0).
HERO_ID = "S001"
ONE_FIVE_ID = "S002"
HERO_REVIEW_COUNT = 100

_POSITIVE_TEXTS = [
    "excellent payroll engine works perfectly",
    "great reports and excellent support",
    "love the dashboards fantastic product",
    "reliable intuitive and seamless setup",
]
_NEGATIVE_TEXTS = [
    "terrible crashes and awful support",
    "broken exports useless reports",
    "disappointing slow and unreliable",
    "horrible setup constant errors",
]
_NEUTRAL_TEXT = "calculates wages monthly for staff members"


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    """Invoke the CLI in-process; returns (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = cli_main(argv)
        except SystemExit as exc:  # argparse errors
            code = exc.code if isinstance(exc.code, int) else 1
    return code, out.getvalue(), err.getvalue()


def write_synthetic_raw(target: Path) -> tuple[Path, Path]:
    """Write a 20-product metadata/reviews dump pair into ``target``."""
    score = lexicon_score(_NEUTRAL_TEXT)
    assert score.pos == 0.5 and score.neg == 0.5, "neutral fixture text hit the lexicon"

    metadata = target / "metadata.jsonl"
    reviews = target / "reviews.jsonl"
    with metadata.open("w", encoding="utf-8") as f:
        f.write(json.dumps({
            "asin": HERO_ID,
            "description": "payroll software for growing teams with audit trails",
            "category": ["Software", "Business", "Payroll"],
            "price": "$120.00",
        }) + "\n")
        f.write(json.dumps({
            "asin": ONE_FIVE_ID,
            "description": "payroll software for growing teams with mobile approvals",
            "category": ["Software", "Business", "Payroll"],
            "price": "$110.00",
        }) + "\n")
        for i in range(3, 21):
            f.write(json.dumps({
                "asin": f"S{i:03d}",
                "description": f"payroll software for growing teams edition {i}",
                "category": ["Software", "Business",
                             "Payroll" if i % 2 else "Accounting"],
                "price": f"${i * 45}.00",
            }) + "\n")

    with reviews.open("w", encoding="utf-8") as f:
        for j in range(HERO_REVIEW_COUNT):
            f.write(json.dumps({
                "asin": HERO_ID,
                "reviewText": _POSITIVE_TEXTS[j % len(_POSITIVE_TEXTS)],
                "summary": "good",
                "overall": 4,
                "verified": True,
            }) + "\n")
        f.write(json.dumps({
            "asin": ONE_FIVE_ID,
            "reviewText": _NEUTRAL_TEXT,
            "summary": "fine",
            "overall": 5,
            "verified": True,
        }) + "\n")
        for i in range(3, 21):
            for j in range(2 + i % 3):
                good = (i + j) % 2 == 0
                texts = _POSITIVE_TEXTS if good else _NEGATIVE_TEXTS
                f.write(json.dumps({
                    "asin": f"S{i:03d}",
                    "reviewText": texts[(i + j) % len(texts)],
                    "summary": "ok",
                    "overall": 4 if good else 2,
                    "verified": bool(j % 2),
                }) + "\n")
    return metadata, reviews


def build_synthetic_store(store_dir: Path, *, dim: int = 64, k: int = 5,
                          seed: int = 42) -> Path:
    """Ingest + precompute (fallback providers) + build, all in-process."""
    raw_dir = store_dir.parent / (store_dir.name + "-raw")
    raw_dir.mkdir(parents=True, exist_ok=True)
    metadata, reviews = write_synthetic_raw(raw_dir)

    result = ingest(metadata, reviews)
    products = simulate_costs(result.products)
    write_store(store_dir, products, result.reviews, result.counts, params={})

    items = [(p.id, p.description) for p in products]
    precompute_embeddings(items, FallbackEmbedProvider(dim=dim),
                          store_dir / EMBEDDINGS_FILE)
    provider = LexiconSentimentProvider()
    scores = provider.score_reviews([(r.review_id, r.text) for r in result.reviews])
    write_sentiment_file(store_dir / SENTIMENTS_FILE,
                         [(r.review_id, scores[r.review_id]) for r in result.reviews],
                         provider=provider.name, normalized=True)
    build_store(store_dir, k=k, seed=seed)
    return store_dir


@pytest.fixture(scope="session")
def synthetic_store(tmp_path_factory) -> Path:
    return build_synthetic_store(tmp_path_factory.mktemp("store") / "store")
