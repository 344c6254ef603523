"""Embedding acquisition, cosine similarity and top-k preselection.

Product-description embeddings come from a file (precomputed), a remote
service, or the hermetic feature-hashing fallback. The index is an
exhaustive-scan structure: at catalog scale (thousands of products) a
vectorized full scan beats anything cleverer, and the tie-break is exact.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests

from .errors import FormatError, ProviderError
from .sentiment import _post_with_retries
from .vectorize import tokenize

EMBEDDING_FORMAT = "llmrs-embeddings"
EMBEDDING_VERSION = 1

FALLBACK_PROVIDER_NAME = "fallback-hash-v1"
FALLBACK_MIN_DIM = 8
_HASH_PERSON = b"llmrs-hash-v1"


def cosine(a, b) -> float:
    """Cosine similarity (a . b) / (|a| |b|), clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("cosine expects 1-d vectors")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


class EmbeddingIndex:
    """Immutable id -> vector store with a cached scan matrix."""

    def __init__(self, ids: Sequence[str], matrix: np.ndarray, provider_name: str):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(ids):
            raise ValueError("matrix must be (len(ids), dim)")
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate product ids in index")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("index vectors must be finite")
        norms = np.linalg.norm(matrix, axis=1)
        if matrix.shape[0] and np.any(norms == 0.0):
            raise ValueError("index vectors must be non-zero")
        self.ids = list(ids)
        self.matrix = matrix
        self.provider_name = provider_name
        self._row_of = {pid: i for i, pid in enumerate(self.ids)}
        self._norms = norms
        # lexicographic rank of each row's id, for deterministic tie-breaks
        self._id_rank = np.empty(len(self.ids), dtype=np.int64)
        for rank, row in enumerate(sorted(range(len(self.ids)), key=lambda i: self.ids[i])):
            self._id_rank[row] = rank

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, product_id: str) -> bool:
        return product_id in self._row_of

    def get(self, product_id: str) -> np.ndarray:
        return self.matrix[self._row_of[product_id]]

    def subset(self, product_ids: Iterable[str]) -> "EmbeddingIndex":
        """View over a subset of ids (order follows this index)."""
        wanted = set(product_ids)
        keep = [i for i in range(len(self.ids)) if self.ids[i] in wanted]
        return EmbeddingIndex([self.ids[i] for i in keep], self.matrix[keep], self.provider_name)


def top_k_similar(query, index: EmbeddingIndex, k: int) -> list[tuple[str, float]]:
    """The k most cosine-similar entries, descending, ties by id ascending.

    Exhaustive scan; returns fewer than k only when the index is smaller.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        raise ValueError("index is empty")
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != index.dim:
        raise ValueError(f"query dimension {q.shape} does not match index dim {index.dim}")
    qnorm = np.linalg.norm(q)
    if qnorm == 0.0:
        raise ValueError("cosine is undefined for a zero vector")
    sims = np.clip((index.matrix @ q) / (index._norms * qnorm), -1.0, 1.0)
    order = np.lexsort((index._id_rank, -sims))[:k]
    return [(index.ids[i], float(sims[i])) for i in order]


def _hash_token(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, person=_HASH_PERSON).digest()
    return int.from_bytes(digest, "big")


def fallback_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic signed feature hashing of the tokenized text.

    Each token hashes (blake2b, fixed personalization string) to a bucket
    ``h % dim``; the top hash bit gives the sign. The accumulated vector is
    L2-normalized. Texts with no surviving tokens, and the measure-zero
    case of exact cancellation, map to the basis vector e0.
    """
    if dim < FALLBACK_MIN_DIM:
        raise ValueError(f"fallback embedding dim must be >= {FALLBACK_MIN_DIM}")
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokenize(text):
        h = _hash_token(token)
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[h % dim] += sign
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec[0] = 1.0
        return vec
    return vec / norm


class FallbackEmbedProvider:
    """Hermetic embedding backend built on :func:`fallback_embed`."""

    name = FALLBACK_PROVIDER_NAME

    def __init__(self, dim: int = 256):
        if dim < FALLBACK_MIN_DIM:
            raise ValueError(f"fallback embedding dim must be >= {FALLBACK_MIN_DIM}")
        self.dim = dim

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.empty((0, self.dim), dtype=np.float64)
        return np.stack([fallback_embed(t, self.dim) for t in texts])


class HttpEmbedProvider:
    """POST batches of texts to a remote embedding service.

    Protocol: {"texts": [...]} -> {"vectors": [[...], ...]} in order.
    ``dim`` may be left None and is pinned by the first response.
    """

    def __init__(self, endpoint: str, dim: int | None = None, name: str = "http",
                 batch_size: int = 32, max_retries: int = 3, backoff: float = 0.5,
                 timeout: float = 30.0, session=None):
        if not endpoint:
            raise ProviderError("embedding endpoint is not configured")
        self.endpoint = endpoint
        self.dim = dim
        self.name = name
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self._session = session or requests.Session()

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        rows: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            payload = _post_with_retries(
                self._session, self.endpoint, {"texts": batch},
                max_retries=self.max_retries, backoff=self.backoff, timeout=self.timeout,
            )
            vectors = payload.get("vectors")
            if not isinstance(vectors, list) or len(vectors) != len(batch):
                raise ProviderError(
                    f"embedding endpoint returned {len(vectors) if isinstance(vectors, list) else 'no'}"
                    f" vectors for {len(batch)} texts"
                )
            for vec in vectors:
                if self.dim is None:
                    self.dim = len(vec)
                if len(vec) != self.dim:
                    raise ProviderError(
                        f"embedding endpoint returned a {len(vec)}-d vector, expected {self.dim}"
                    )
                rows.append([float(x) for x in vec])
        if self.dim is None:
            raise ProviderError("embedding dimension unknown: no texts were embedded")
        return np.array(rows, dtype=np.float64).reshape(len(texts), self.dim)


def load_embedding_file(path: str | Path) -> EmbeddingIndex:
    """Read and validate an interchange file of product embeddings."""
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
        if header.get("format") != EMBEDDING_FORMAT:
            raise FormatError(f"unexpected format {header.get('format')!r}", line=1)
        if header.get("version") != EMBEDDING_VERSION:
            raise FormatError(f"unsupported version {header.get('version')!r}", line=1)
        dim = header.get("dim")
        if not isinstance(dim, int) or dim < 1:
            raise FormatError(f"header field 'dim' must be a positive integer, got {dim!r}", line=1)
        provider = header.get("provider")
        if not isinstance(provider, str) or not provider:
            raise FormatError("header field 'provider' must be a non-empty string", line=1)

        ids: list[str] = []
        seen: set[str] = set()
        rows: list[list[float]] = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"row is not valid JSON: {exc}", line=lineno) from exc
            pid = row.get("id")
            if not isinstance(pid, str) or not pid:
                raise FormatError("row is missing 'id'", line=lineno)
            if pid in seen:
                raise FormatError(f"duplicate id {pid!r}", line=lineno)
            vec = row.get("vec")
            if not isinstance(vec, list):
                raise FormatError("row is missing 'vec'", line=lineno)
            if len(vec) != dim:
                raise FormatError(f"vector has {len(vec)} values, header declares dim {dim}", line=lineno)
            values = np.asarray(vec, dtype=np.float64)
            if not np.all(np.isfinite(values)):
                raise FormatError("vector has non-finite values", line=lineno)
            if not np.any(values):
                raise FormatError("vector is all zeros", line=lineno)
            seen.add(pid)
            ids.append(pid)
            rows.append(values)
    matrix = np.array(rows, dtype=np.float64).reshape(len(ids), dim)
    return EmbeddingIndex(ids, matrix, provider)


def write_embedding_file(path: str | Path, provider_name: str, dim: int,
                         rows: Iterable[tuple[str, np.ndarray]]) -> int:
    """Write an interchange file atomically; returns the row count."""
    header = {
        "format": EMBEDDING_FORMAT,
        "version": EMBEDDING_VERSION,
        "dim": dim,
        "provider": provider_name,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    count = 0
    try:
        with tmp.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")
            for pid, vec in rows:
                fh.write(json.dumps({"id": pid, "vec": [float(x) for x in vec]}) + "\n")
                count += 1
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    tmp.replace(path)
    return count


def precompute_embeddings(items: Sequence[tuple[str, str]], provider,
                          out_path: str | Path) -> int:
    """Embed (id, text) pairs and write the interchange file.

    A provider failure removes any partial output before re-raising.
    """
    texts = [text for _, text in items]
    matrix = provider.embed_texts(texts)
    return write_embedding_file(
        out_path, provider.name, provider.dim,
        ((pid, matrix[i]) for i, (pid, _) in enumerate(items)),
    )
