"""Per-review sentiment scores from interchangeable backends.

Three providers sit behind one interface: ``file`` (precomputed scores,
the production path), ``http`` (remote zero-shot inference) and
``lexicon`` (a deterministic word-list scorer used as the hermetic
fallback). Scores aggregate per product into the (P, N, S) triple the
ranker consumes.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .errors import FormatError, ProviderError
from .vectorize import _load_wordlist, tokenize

SENTIMENT_FORMAT = "llmrs-sentiments"
SENTIMENT_VERSION = 1
SENTIMENT_LABELS = ["positive", "negative"]
NORMALIZED_TOL = 1e-3

LEXICON_PROVIDER_NAME = "lexicon-v1"


@dataclass(frozen=True)
class SentimentScore:
    """A (positive, negative) pair, each in [0, 1]."""

    pos: float
    neg: float

    def __post_init__(self):
        for label, v in (("pos", self.pos), ("neg", self.neg)):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{label} score {v!r} outside [0, 1]")


@dataclass(frozen=True)
class ProductSentimentAggregate:
    """Sum of review scores for one product: P, N and review count S."""

    product_id: str
    pos_sum: float
    neg_sum: float
    count: int


def aggregate(product_id: str, scores: Sequence[SentimentScore]) -> ProductSentimentAggregate | None:
    """Sum scores over a product's reviews; None when it has none."""
    if not scores:
        return None
    return ProductSentimentAggregate(
        product_id=product_id,
        pos_sum=sum(s.pos for s in scores),
        neg_sum=sum(s.neg for s in scores),
        count=len(scores),
    )


class SentimentProvider:
    """Interface: score reviews, identified by (review_id, text)."""

    name: str = "abstract"
    normalized: bool = False

    def score_review(self, review_id: str, text: str) -> SentimentScore:
        raise NotImplementedError

    def score_reviews(self, reviews: Sequence[tuple[str, str]]) -> dict[str, SentimentScore]:
        return {rid: self.score_review(rid, text) for rid, text in reviews}


class LexiconSentimentProvider(SentimentProvider):
    """Count tokens against shipped positive/negative word lists.

    With p positive and n negative hits the score is (p/(p+n), n/(p+n));
    a text with no hits scores neutral (0.5, 0.5). Pure and deterministic,
    which makes it the hermetic stand-in for a zero-shot model.
    """

    name = LEXICON_PROVIDER_NAME
    normalized = True

    def __init__(self):
        self._positive, _ = _load_wordlist("positive-words.txt")
        self._negative, _ = _load_wordlist("negative-words.txt")

    def score_text(self, text: str) -> SentimentScore:
        p = n = 0
        for token in tokenize(text):
            if token in self._positive:
                p += 1
            elif token in self._negative:
                n += 1
        if p + n == 0:
            return SentimentScore(0.5, 0.5)
        return SentimentScore(p / (p + n), n / (p + n))

    def score_review(self, review_id: str, text: str) -> SentimentScore:
        return self.score_text(text)


_default_lexicon: LexiconSentimentProvider | None = None


def lexicon_score(text: str) -> SentimentScore:
    """Score a text with the shipped lexicon backend."""
    global _default_lexicon
    if _default_lexicon is None:
        _default_lexicon = LexiconSentimentProvider()
    return _default_lexicon.score_text(text)


class FileSentimentProvider(SentimentProvider):
    """Serve precomputed scores loaded from an interchange file."""

    def __init__(self, scores: Mapping[str, SentimentScore], name: str, normalized: bool):
        self._scores = dict(scores)
        self.name = name
        self.normalized = normalized

    @classmethod
    def open(cls, path: str | Path) -> "FileSentimentProvider":
        loaded = load_sentiment_file(path)
        return cls(loaded.scores, name=loaded.provider, normalized=loaded.normalized)

    def score_review(self, review_id: str, text: str) -> SentimentScore:
        try:
            return self._scores[review_id]
        except KeyError:
            raise ProviderError(
                f"sentiment file has no score for review id {review_id!r}"
            ) from None


class HttpSentimentProvider(SentimentProvider):
    """POST batches of texts to a remote scorer.

    Protocol: request {"texts": [...]} -> response {"scores": [{"pos": ..,
    "neg": ..}, ...]} in the same order. Transport failures are retried
    up to ``max_retries`` times with exponential backoff.
    """

    name = "http"
    normalized = False

    def __init__(self, endpoint: str, batch_size: int = 32, max_retries: int = 3,
                 backoff: float = 0.5, timeout: float = 30.0, session=None):
        if not endpoint:
            raise ProviderError("sentiment endpoint is not configured")
        self.endpoint = endpoint
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self._session = session or requests.Session()

    def score_review(self, review_id: str, text: str) -> SentimentScore:
        return self._score_batch([text])[0]

    def score_reviews(self, reviews: Sequence[tuple[str, str]]) -> dict[str, SentimentScore]:
        out: dict[str, SentimentScore] = {}
        for start in range(0, len(reviews), self.batch_size):
            batch = reviews[start : start + self.batch_size]
            scores = self._score_batch([text for _, text in batch])
            out.update({rid: s for (rid, _), s in zip(batch, scores)})
        return out

    def _score_batch(self, texts: list[str]) -> list[SentimentScore]:
        payload = _post_with_retries(
            self._session, self.endpoint, {"texts": texts},
            max_retries=self.max_retries, backoff=self.backoff, timeout=self.timeout,
        )
        scores = payload.get("scores")
        if not isinstance(scores, list) or len(scores) != len(texts):
            raise ProviderError(
                f"sentiment endpoint returned {len(scores) if isinstance(scores, list) else 'no'}"
                f" scores for {len(texts)} texts"
            )
        try:
            return [SentimentScore(float(s["pos"]), float(s["neg"])) for s in scores]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"sentiment endpoint returned a malformed score: {exc}") from exc


def _post_with_retries(session, endpoint: str, body: dict, *, max_retries: int,
                       backoff: float, timeout: float) -> dict:
    """Shared retry loop for the two remote protocols."""
    last_error: Exception | None = None
    for attempt in range(max_retries + 1):
        if attempt:
            time.sleep(backoff * (2 ** (attempt - 1)))
        try:
            resp = session.post(endpoint, json=body, timeout=timeout)
            if resp.status_code >= 500:
                last_error = ProviderError(f"{endpoint} answered {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ProviderError(f"{endpoint} answered {resp.status_code}: {resp.text[:200]}")
            return resp.json()
        except (requests.RequestException, ValueError) as exc:
            last_error = exc
    raise ProviderError(
        f"{endpoint} unreachable after {max_retries + 1} attempts: {last_error}"
    )


@dataclass
class SentimentFile:
    scores: dict[str, SentimentScore]
    provider: str
    normalized: bool


def load_sentiment_file(path: str | Path) -> SentimentFile:
    """Read and validate an interchange file of per-review scores."""
    path = Path(path)
    try:
        fh = path.open(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise FormatError("missing header", line=1)
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"header is not valid JSON: {exc}", line=1) from exc
        if header.get("format") != SENTIMENT_FORMAT:
            raise FormatError(f"unexpected format {header.get('format')!r}", line=1)
        if header.get("version") != SENTIMENT_VERSION:
            raise FormatError(f"unsupported version {header.get('version')!r}", line=1)
        if header.get("labels") != SENTIMENT_LABELS:
            raise FormatError(f"unexpected labels {header.get('labels')!r}", line=1)
        normalized = header.get("normalized")
        if not isinstance(normalized, bool):
            raise FormatError("header field 'normalized' must be true or false", line=1)
        provider = header.get("provider")
        if not isinstance(provider, str) or not provider:
            raise FormatError("header field 'provider' must be a non-empty string", line=1)

        scores: dict[str, SentimentScore] = {}
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"row is not valid JSON: {exc}", line=lineno) from exc
            rid = row.get("review_id")
            if not isinstance(rid, str) or not rid:
                raise FormatError("row is missing 'review_id'", line=lineno)
            if rid in scores:
                raise FormatError(f"duplicate review id {rid!r}", line=lineno)
            try:
                score = SentimentScore(float(row["pos"]), float(row["neg"]))
            except (KeyError, TypeError) as exc:
                raise FormatError(f"row is missing score field {exc}", line=lineno) from exc
            except ValueError as exc:
                raise FormatError(str(exc), line=lineno) from exc
            if normalized and abs(score.pos + score.neg - 1.0) > NORMALIZED_TOL:
                raise FormatError(
                    f"provider claims normalized output but pos + neg = {score.pos + score.neg}",
                    line=lineno,
                )
            scores[rid] = score
    return SentimentFile(scores=scores, provider=provider, normalized=normalized)


def write_sentiment_file(path: str | Path, rows: Sequence[tuple[str, SentimentScore]],
                         provider: str, normalized: bool) -> None:
    header = {
        "format": SENTIMENT_FORMAT,
        "version": SENTIMENT_VERSION,
        "labels": SENTIMENT_LABELS,
        "provider": provider,
        "normalized": normalized,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for rid, score in rows:
            fh.write(json.dumps({"review_id": rid, "pos": score.pos, "neg": score.neg}) + "\n")
    tmp.replace(path)
