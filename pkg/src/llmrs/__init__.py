"""Review-aware product recommendation over local catalog stores.

Pipeline: ingest raw metadata/review dumps, precompute embeddings and
per-review sentiment, cluster review texts to derive consistent ratings,
then rank budget-feasible products by (P - N) * S against an
average-star baseline.
"""

from .catalog import (Catalog, CatalogStats, IngestResult, Product, Review,
                      descriptive_stats, ingest, load_store, parse_price,
                      simulate_costs, write_store)
from .cluster import (ClusterModel, ClusterStats, KMeans, assign_cluster_ratings,
                      build_cluster_model, cluster_rate, consistent_rating,
                      label_review)
from .config import EngineConfig, load_config
from .embed import (EmbeddingIndex, FallbackEmbedProvider, HttpEmbedProvider,
                    cosine, fallback_embed, load_embedding_file,
                    precompute_embeddings, top_k_similar, write_embedding_file)
from .engine import BuildReport, CrosstabReport, Engine, build_store, crosstab
from .errors import (FormatError, LlmrsError, MisconfigurationError, ProviderError,
                     StoreError)
from .rank import (CompareResult, QueryRequest, QueryResult, Recommendation,
                   baseline_avg_rating, compare, monetary_filter, rank_score,
                   run_query)
from .sentiment import (FileSentimentProvider, HttpSentimentProvider,
                        LexiconSentimentProvider, ProductSentimentAggregate,
                        SentimentScore, aggregate, lexicon_score,
                        load_sentiment_file, write_sentiment_file)
from .vectorize import SparseVector, TfidfVectorizer, tokenize

__version__ = "0.1.0"

__all__ = [
    "Catalog", "CatalogStats", "IngestResult", "Product", "Review",
    "descriptive_stats", "ingest", "load_store", "parse_price",
    "simulate_costs", "write_store",
    "ClusterModel", "ClusterStats", "KMeans", "assign_cluster_ratings",
    "build_cluster_model", "cluster_rate", "consistent_rating", "label_review",
    "EngineConfig", "load_config",
    "EmbeddingIndex", "FallbackEmbedProvider", "HttpEmbedProvider", "cosine",
    "fallback_embed", "load_embedding_file", "precompute_embeddings",
    "top_k_similar", "write_embedding_file",
    "BuildReport", "CrosstabReport", "Engine", "build_store", "crosstab",
    "FormatError", "LlmrsError", "MisconfigurationError", "ProviderError",
    "StoreError",
    "CompareResult", "QueryRequest", "QueryResult", "Recommendation",
    "baseline_avg_rating", "compare", "monetary_filter", "rank_score", "run_query",
    "FileSentimentProvider", "HttpSentimentProvider", "LexiconSentimentProvider",
    "ProductSentimentAggregate", "SentimentScore", "aggregate", "lexicon_score",
    "load_sentiment_file", "write_sentiment_file",
    "SparseVector", "TfidfVectorizer", "tokenize",
    "__version__",
]
