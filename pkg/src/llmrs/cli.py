"""Command line interface.

Exit codes: 0 success, 1 unexpected internal error, 2 missing or unreadable
store, 3 provider misconfiguration or provider failure, 4 input validation
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .catalog import (Catalog, STAT_COLUMNS, ingest, load_store, simulate_costs,
                      write_store)
from .cluster import NEGATIVE, POSITIVE
from .config import EngineConfig, load_config
from .embed import (FallbackEmbedProvider, HttpEmbedProvider, load_embedding_file,
                    precompute_embeddings, write_embedding_file)
from .engine import (EMBEDDINGS_FILE, SENTIMENTS_FILE, Engine, build_store)
from .errors import (FormatError, LlmrsError, MisconfigurationError, ProviderError,
                     StoreError)
from .rank import (RANKER_BASELINE, RANKER_LLMRS, STATUS_OK, QueryRequest, QueryResult)
from .sentiment import (FileSentimentProvider, HttpSentimentProvider,
                        LexiconSentimentProvider, write_sentiment_file)
from .service import serve

MONEY_SCALE = 100  # table display only; stored values never change

_STAT_HEADERS = {
    "price": "Price",
    "license_fee": "License fee",
    "implementation_cost": "Implementation cost",
    "maintenance_cost": "Maintenance cost",
    "positive_score": "Positive score",
    "negative_score": "Negative score",
    "num_reviews": "Number of reviews",
}


def _print_json(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")


def _money(value: float, x100: bool) -> str:
    if x100:
        value = value * MONEY_SCALE
    return f"${value:,.2f}"


def _truncate(text: str, width: int = 40) -> str:
    return text if len(text) <= width else text[: width - 3] + "..."


def _render_table(headers: list[str], rows: list[list[str]]) -> str:
    """Fixed-width table: first column left-aligned, the rest right-aligned."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []

    def emit(cells):
        parts = [cells[0].ljust(widths[0])]
        parts += [cells[i].rjust(widths[i]) for i in range(1, len(cells))]
        lines.append("  ".join(parts).rstrip())

    emit(headers)
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        emit(row)
    return "\n".join(lines)


def _result_table(result: QueryResult, ranker: str, x100: bool) -> str:
    score_header = "Rank Score" if ranker == RANKER_LLMRS else "Avg Rating"
    headers = ["Description", "Price", "Licenc. Fee", "Implem Fee", "Main. Fee", score_header]
    rows = []
    for r in result.results:
        score = r.rank_score if ranker == RANKER_LLMRS else r.avg_rating
        rows.append([
            _truncate(r.description),
            _money(r.price, x100),
            _money(r.license_fee, x100),
            _money(r.implementation_cost, x100),
            _money(r.maintenance_cost, x100),
            f"{score:,.2f}",
        ])
    return _render_table(headers, rows)


def _config_from_args(args) -> EngineConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "k", None) is not None:
        overrides["k_clusters"] = args.k
    if getattr(args, "preselect_m", None) is not None:
        overrides["preselect_m"] = args.preselect_m
    if getattr(args, "dim", None) is not None:
        overrides["embed_dim"] = args.dim
    return load_config(overrides)


def _x100(args, config: EngineConfig, fmt: str) -> bool:
    if getattr(args, "display_x100", None) is not None:
        return args.display_x100 == "on"
    if config.display_x100 is not None:
        return config.display_x100
    return fmt == "table"


# ---------------------------------------------------------------- commands

def _cmd_ingest(args) -> int:
    result = ingest(args.metadata, args.reviews)
    products = simulate_costs(result.products)
    write_store(args.out, products, result.reviews, result.counts,
                params={"source_metadata": str(args.metadata),
                        "source_reviews": str(args.reviews)})
    for key in sorted(result.counts):
        print(f"{key}: {result.counts[key]}")
    print(f"store written to {args.out}")
    return 0


def _embed_items(catalog: Catalog) -> list[tuple[str, str]]:
    return [(p.id, p.description) for p in catalog.products.values()]


def _cmd_precompute(args) -> int:
    config = _config_from_args(args)
    catalog = load_store(args.store)
    out = Path(args.out)

    if args.kind == "embeddings":
        items = _embed_items(catalog)
        if args.provider == "fallback":
            provider = FallbackEmbedProvider(dim=config.embed_dim)
            count = precompute_embeddings(items, provider, out)
        elif args.provider == "http":
            if not config.embed_endpoint:
                raise MisconfigurationError(
                    "http embedding provider needs LLMRS_EMBED_ENDPOINT "
                    "(or embed_endpoint in the config file)")
            provider = HttpEmbedProvider(config.embed_endpoint, dim=args.dim,
                                         batch_size=config.batch_size)
            count = precompute_embeddings(items, provider, out)
        else:  # file
            if not args.infile:
                raise ValueError("--provider file requires --in <embeddings.jsonl>")
            index = load_embedding_file(args.infile)
            missing = [pid for pid, _ in items if pid not in index]
            if missing:
                raise ProviderError(
                    f"{args.infile} lacks embeddings for {len(missing)} product(s); "
                    f"first missing id: {missing[0]}")
            rows = ((pid, index.get(pid)) for pid, _ in items)
            count = write_embedding_file(out, index.provider_name, index.dim, rows)
        print(f"wrote {count} embeddings to {out}")
        return 0

    reviews = [(r.review_id, r.text) for r in catalog.reviews]
    if args.provider == "fallback":
        provider = LexiconSentimentProvider()
        scores = provider.score_reviews(reviews)
        normalized = True
    elif args.provider == "http":
        if not config.sentiment_endpoint:
            raise MisconfigurationError(
                "http sentiment provider needs LLMRS_SENTIMENT_ENDPOINT "
                "(or sentiment_endpoint in the config file)")
        provider = HttpSentimentProvider(config.sentiment_endpoint,
                                         batch_size=config.batch_size)
        scores = provider.score_reviews(reviews)
        normalized = False  # remote models make no normalization promise
    else:  # file
        if not args.infile:
            raise ValueError("--provider file requires --in <sentiments.jsonl>")
        from .sentiment import load_sentiment_file

        infile = load_sentiment_file(args.infile)
        missing = [rid for rid, _ in reviews if rid not in infile.scores]
        if missing:
            raise ProviderError(
                f"{args.infile} lacks scores for {len(missing)} review(s); "
                f"first missing id: {missing[0]}")
        provider = FileSentimentProvider(infile.scores, infile.provider, infile.normalized)
        scores = {rid: infile.scores[rid] for rid, _ in reviews}
        normalized = infile.normalized
    write_sentiment_file(out, [(rid, scores[rid]) for rid, _ in reviews],
                         provider=provider.name, normalized=normalized)
    print(f"wrote {len(reviews)} sentiment scores to {out}")
    return 0


def _cmd_build(args) -> int:
    config = _config_from_args(args)
    report = build_store(args.store, k=config.k_clusters, seed=config.seed)
    print(f"clustered {report.reviews_clustered} of {report.reviews_scored} reviews "
          f"into {report.k} clusters (seed {report.seed}, "
          f"{report.iterations_run} iterations, final SSE {report.final_sse:.4f})")
    headers = ["Cluster", "Positive", "Negative", "Rate", "Rating"]
    rows = [[str(c.index), str(c.x_p), str(c.x_n), f"{c.rate:.4f}", str(c.rating)]
            for c in report.per_cluster]
    print(_render_table(headers, rows))
    print(f"aggregated {report.products_aggregated} products")
    return 0


def _request_from_args(args, config: EngineConfig, ranker: str) -> QueryRequest:
    return QueryRequest(
        text=args.text,
        max_price=args.max_price,
        max_license_fee=args.max_license,
        max_implementation_cost=args.max_implementation,
        max_maintenance_cost=args.max_maintenance,
        top_k=args.top_k,
        preselect_m=args.preselect_m if args.preselect_m is not None else config.preselect_m,
        ranker=ranker,
    )


def _cmd_query(args) -> int:
    config = _config_from_args(args)
    engine = Engine.load(args.store, config=config)
    result = engine.query(_request_from_args(args, config, args.ranker))
    if args.format == "json":
        _print_json(result.as_dict())
        return 0
    if result.status != STATUS_OK:
        print(result.status)
        return 0
    if not result.results:
        print("no results")
        return 0
    print(_result_table(result, args.ranker, _x100(args, config, args.format)))
    return 0


def _cmd_compare(args) -> int:
    config = _config_from_args(args)
    engine = Engine.load(args.store, config=config)
    result = engine.compare(_request_from_args(args, config, RANKER_LLMRS))
    if args.format == "json":
        _print_json(result.as_dict())
        return 0
    if result.llmrs.status != STATUS_OK:
        print(result.llmrs.status)
        return 0
    x100 = _x100(args, config, args.format)
    print("Review-aware ranking:")
    print(_result_table(result.llmrs, RANKER_LLMRS, x100))
    print()
    print("Average-rating baseline:")
    print(_result_table(result.baseline, RANKER_BASELINE, x100))
    print()
    print(f"only ranked by review model: {', '.join(result.only_in_llmrs) or '(none)'}")
    print(f"only ranked by baseline:     {', '.join(result.only_in_baseline) or '(none)'}")
    return 0


def _cmd_stats(args) -> int:
    engine = Engine.load(args.store)
    stats = engine.stats()
    if args.format == "json":
        _print_json({name: vars(col) for name, col in stats.columns.items()})
        return 0
    headers = [""] + [_STAT_HEADERS[name] for name in STAT_COLUMNS]
    row_labels = ["count", "mean", "std", "min", "25%", "50%", "75%", "max"]
    attr_names = ["count", "mean", "std", "min", "q25", "q50", "q75", "max"]
    rows = []
    for label, attr in zip(row_labels, attr_names):
        cells = [label]
        for name in STAT_COLUMNS:
            value = getattr(stats.columns[name], attr)
            cells.append(str(value) if attr == "count" else f"{value:,.2f}")
        rows.append(cells)
    print(_render_table(headers, rows))
    return 0


def _cmd_crosstab(args) -> int:
    engine = Engine.load(args.store)
    report = engine.crosstab()
    if args.format == "json":
        _print_json(report.as_dict())
        return 0
    headers = ["Sentiment"] + [str(r) for r in range(1, 6)] + ["Total"]
    rows = []
    for label in (NEGATIVE, POSITIVE):
        row = report.counts[label]
        cells = [label] + [str(row[r]) for r in range(1, 6)]
        cells.append(str(sum(row.values())))
        rows.append(cells)
    rows.append(["total"]
                + [str(sum(report.counts[l][r] for l in (NEGATIVE, POSITIVE)))
                   for r in range(1, 6)]
                + [str(report.total)])
    print(_render_table(headers, rows))
    return 0


def _cmd_serve(args) -> int:
    config = _config_from_args(args)
    engine = Engine.load(args.store, config=config)
    print(f"serving {len(engine.catalog.products)} products on port {args.port}")
    serve(engine, args.port)
    return 0


# ---------------------------------------------------------------- parser

def _add_query_flags(p: argparse.ArgumentParser, with_ranker: bool) -> None:
    p.add_argument("--store", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--max-price", type=float, default=None)
    p.add_argument("--max-license", type=float, default=None)
    p.add_argument("--max-implementation", type=float, default=None)
    p.add_argument("--max-maintenance", type=float, default=None)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--preselect-m", type=int, default=None)
    if with_ranker:
        p.add_argument("--ranker", choices=[RANKER_LLMRS, RANKER_BASELINE],
                       default=RANKER_LLMRS)
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.add_argument("--display-x100", choices=["on", "off"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llmrs",
        description="Review-aware product recommendation over a local store.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse raw metadata/review dumps into a store")
    p.add_argument("--metadata", required=True)
    p.add_argument("--reviews", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("precompute", help="materialize embeddings or sentiment scores")
    p.add_argument("kind", choices=["embeddings", "sentiments"])
    p.add_argument("--store", required=True)
    p.add_argument("--provider", required=True, choices=["file", "http", "fallback"])
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_precompute)

    p = sub.add_parser("build", help="fit clustering and ranking aggregates")
    p.add_argument("--store", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("query", help="rank products for a query text")
    _add_query_flags(p, with_ranker=True)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("compare", help="run both rankers and diff the picks")
    _add_query_flags(p, with_ranker=False)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("stats", help="descriptive statistics over the catalog")
    p.add_argument("--store", required=True)
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("crosstab", help="sentiment label vs star rating counts")
    p.add_argument("--store", required=True)
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.set_defaults(func=_cmd_crosstab)

    p = sub.add_parser("serve", help="HTTP recommendation service")
    p.add_argument("--store", required=True)
    p.add_argument("--port", type=int, required=True)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MisconfigurationError, ProviderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LlmrsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
