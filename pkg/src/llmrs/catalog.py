"""Catalog ingestion: product metadata, reviews, simulated costs, statistics.

Sources are JSON Lines in the Amazon metadata/review layout. Ingestion is
streaming and deterministic: products deduplicate by id (first record
wins), review ids are assigned as "<product_id>#<ordinal>" where the
ordinal counts that product's id-bearing records in file order. Records
that later turn out malformed or unlinkable still consume their ordinal,
so any sidecar processing the same reviews file derives identical ids.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import FormatError, StoreError
from .sentiment import ProductSentimentAggregate

STORE_FORMAT = "llmrs-store"
STORE_VERSION = 1

PRODUCTS_FILE = "products.jsonl"
REVIEWS_FILE = "reviews.jsonl"
MANIFEST_FILE = "manifest.json"

_PRICE_RE = re.compile(r"^\$?\s*(\d{1,3}(?:,\d{3})*|\d+)(\.\d+)?$")

STAT_COLUMNS = (
    "price",
    "license_fee",
    "implementation_cost",
    "maintenance_cost",
    "positive_score",
    "negative_score",
    "num_reviews",
)


@dataclass(frozen=True)
class Product:
    id: str
    description: str
    category: str
    price: float
    license_fee: float | None = None
    implementation_cost: float | None = None
    maintenance_cost: float | None = None
    title: str | None = None
    brand: str | None = None


@dataclass(frozen=True)
class Review:
    review_id: str
    product_id: str
    text: str
    summary: str
    rating: int
    verified: bool


def parse_price(raw) -> float | None:
    """Parse a dataset price like "$39.99" or "1,299.00"; None if unparseable.

    Numeric inputs are accepted as-is. Negative values and anything that
    does not look like a plain currency amount come back as None.
    """
    if isinstance(raw, bool):
        return None
    if isinstance(raw, (int, float)):
        value = float(raw)
        return value if np.isfinite(value) and value >= 0 else None
    if not isinstance(raw, str):
        return None
    m = _PRICE_RE.match(raw.strip())
    if not m:
        return None
    return float(m.group(1).replace(",", "") + (m.group(2) or ""))


def _normalize_description(raw) -> str:
    """Dataset descriptions arrive as a string or a list of fragments."""
    if isinstance(raw, str):
        return raw.strip()
    if isinstance(raw, list):
        return " ".join(part.strip() for part in raw if isinstance(part, str) and part.strip())
    return ""


def _leaf_category(raw) -> str:
    """A category path keeps only its leaf label."""
    if isinstance(raw, str):
        return raw.strip()
    if isinstance(raw, list):
        for part in reversed(raw):
            if isinstance(part, str) and part.strip():
                return part.strip()
    return ""


@dataclass
class IngestResult:
    products: list[Product]
    reviews: list[Review]
    counts: dict[str, int]


def _iter_jsonl(path: Path):
    """Yield (lineno, record-or-None) for every non-blank line."""
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                yield lineno, record if isinstance(record, dict) else None
            except json.JSONDecodeError:
                yield lineno, None


def ingest(metadata_path: str | Path, reviews_path: str | Path) -> IngestResult:
    """Stream both sources into a normalized catalog and review store.

    Products without a parseable price are excluded (and counted); their
    reviews, like reviews of unknown products, are dropped. Costs are not
    yet simulated on the returned products.
    """
    metadata_path = Path(metadata_path)
    reviews_path = Path(reviews_path)

    counts = {
        "metadata_records": 0,
        "metadata_malformed": 0,
        "duplicate_products": 0,
        "products_excluded_no_price": 0,
        "products": 0,
        "review_records": 0,
        "reviews_malformed": 0,
        "reviews_dropped": 0,
        "reviews_linked": 0,
    }

    products: dict[str, Product] = {}
    seen_ids: set[str] = set()
    for _, record in _iter_jsonl(metadata_path):
        counts["metadata_records"] += 1
        if record is None:
            counts["metadata_malformed"] += 1
            continue
        asin = record.get("asin")
        if not isinstance(asin, str) or not asin:
            counts["metadata_malformed"] += 1
            continue
        if asin in seen_ids:
            counts["duplicate_products"] += 1
            continue
        seen_ids.add(asin)
        price = parse_price(record.get("price"))
        if price is None:
            counts["products_excluded_no_price"] += 1
            continue
        title = record.get("title")
        brand = record.get("brand")
        products[asin] = Product(
            id=asin,
            description=_normalize_description(record.get("description")),
            category=_leaf_category(record.get("category")),
            price=price,
            title=title if isinstance(title, str) else None,
            brand=brand if isinstance(brand, str) else None,
        )
    counts["products"] = len(products)

    reviews: list[Review] = []
    ordinals: dict[str, int] = {}
    for _, record in _iter_jsonl(reviews_path):
        counts["review_records"] += 1
        if record is None:
            counts["reviews_malformed"] += 1
            continue
        asin = record.get("asin")
        if not isinstance(asin, str) or not asin:
            counts["reviews_malformed"] += 1
            continue
        # every id-bearing record consumes its ordinal, even if skipped below
        ordinal = ordinals.get(asin, 0)
        ordinals[asin] = ordinal + 1
        review_id = f"{asin}#{ordinal}"

        rating = record.get("overall")
        if isinstance(rating, bool) or not isinstance(rating, (int, float)) \
                or float(rating) != int(rating) or not 1 <= int(rating) <= 5:
            counts["reviews_malformed"] += 1
            continue
        text = record.get("reviewText", "")
        summary = record.get("summary", "")
        if not isinstance(text, str) or not isinstance(summary, str):
            counts["reviews_malformed"] += 1
            continue
        if asin not in products:
            counts["reviews_dropped"] += 1
            continue
        verified = record.get("verified")
        reviews.append(Review(
            review_id=review_id,
            product_id=asin,
            text=text,
            summary=summary,
            rating=int(rating),
            verified=verified if isinstance(verified, bool) else False,
        ))
    counts["reviews_linked"] = len(reviews)

    return IngestResult(products=list(products.values()), reviews=reviews, counts=counts)


def simulate_costs(products: Sequence[Product]) -> list[Product]:
    """Fill the three simulated cost fields.

    license_fee = 0.8 x the minimum price in the product's category (over
    this catalog), implementation_cost = 0.5 x price, maintenance_cost =
    0.01 x price (monthly). Order-independent: grouping is by category.
    """
    category_min: dict[str, float] = {}
    for p in products:
        current = category_min.get(p.category)
        if current is None or p.price < current:
            category_min[p.category] = p.price
    return [
        replace(
            p,
            license_fee=0.8 * category_min[p.category],
            implementation_cost=0.5 * p.price,
            maintenance_cost=0.01 * p.price,
        )
        for p in products
    ]


@dataclass
class Catalog:
    """Loaded store snapshot: immutable after load, safe to share."""

    products: dict[str, Product]
    reviews: list[Review]
    manifest: dict

    @property
    def reviews_by_product(self) -> dict[str, list[Review]]:
        grouped: dict[str, list[Review]] = {pid: [] for pid in self.products}
        for r in self.reviews:
            grouped.setdefault(r.product_id, []).append(r)
        return grouped


def write_store(store_dir: str | Path, products: Sequence[Product],
                reviews: Sequence[Review], counts: Mapping[str, int],
                params: Mapping[str, str]) -> None:
    store = Path(store_dir)
    store.mkdir(parents=True, exist_ok=True)

    def dump_lines(path: Path, rows: Iterable[dict]) -> None:
        tmp = path.with_name(path.name + ".tmp")
        with tmp.open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        tmp.replace(path)

    dump_lines(store / PRODUCTS_FILE, (vars(p) for p in products))
    dump_lines(store / REVIEWS_FILE, (vars(r) for r in reviews))
    manifest = {
        "format": STORE_FORMAT,
        "version": STORE_VERSION,
        "counts": dict(counts),
        "params": dict(params),
    }
    tmp = store / (MANIFEST_FILE + ".tmp")
    tmp.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    tmp.replace(store / MANIFEST_FILE)


def load_store(store_dir: str | Path) -> Catalog:
    store = Path(store_dir)
    manifest_path = store / MANIFEST_FILE
    if not manifest_path.is_file():
        raise StoreError(f"{store} is not an ingested store (missing {MANIFEST_FILE})")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise StoreError(f"cannot read {manifest_path}: {exc}") from exc
    if manifest.get("format") != STORE_FORMAT or manifest.get("version") != STORE_VERSION:
        raise StoreError(f"{manifest_path} is not a version-{STORE_VERSION} {STORE_FORMAT} manifest")

    products: dict[str, Product] = {}
    for lineno, record in _iter_jsonl(store / PRODUCTS_FILE):
        if record is None:
            raise FormatError(f"bad product record in {PRODUCTS_FILE}", line=lineno)
        try:
            product = Product(**record)
        except TypeError as exc:
            raise FormatError(f"bad product record in {PRODUCTS_FILE}: {exc}", line=lineno) from exc
        if product.id in products:
            raise FormatError(f"duplicate product id {product.id!r}", line=lineno)
        products[product.id] = product

    reviews: list[Review] = []
    for lineno, record in _iter_jsonl(store / REVIEWS_FILE):
        if record is None:
            raise FormatError(f"bad review record in {REVIEWS_FILE}", line=lineno)
        try:
            reviews.append(Review(**record))
        except TypeError as exc:
            raise FormatError(f"bad review record in {REVIEWS_FILE}: {exc}", line=lineno) from exc

    return Catalog(products=products, reviews=reviews, manifest=manifest)


@dataclass(frozen=True)
class ColumnStats:
    count: int
    mean: float
    std: float
    min: float
    q25: float
    q50: float
    q75: float
    max: float


@dataclass
class CatalogStats:
    columns: dict[str, ColumnStats]

    def as_dict(self) -> dict:
        return {name: vars(stats) for name, stats in self.columns.items()}


def descriptive_stats(products: Sequence[Product],
                      aggregates: Mapping[str, ProductSentimentAggregate]) -> CatalogStats:
    """Per-column sample statistics over the catalog.

    Sentiment columns take (P, N, S) from the product's aggregate and fall
    back to zeros for products with no scored reviews, keeping the count
    identical across columns. std uses the n-1 denominator (0.0 when
    n == 1); quartiles interpolate linearly between order statistics.
    """
    if not products:
        raise ValueError("cannot compute statistics over an empty catalog")

    def series(name: str) -> np.ndarray:
        if name == "positive_score":
            vals = [aggregates[p.id].pos_sum if p.id in aggregates else 0.0 for p in products]
        elif name == "negative_score":
            vals = [aggregates[p.id].neg_sum if p.id in aggregates else 0.0 for p in products]
        elif name == "num_reviews":
            vals = [aggregates[p.id].count if p.id in aggregates else 0 for p in products]
        else:
            vals = [getattr(p, name) for p in products]
        return np.asarray(vals, dtype=np.float64)

    columns = {}
    for name in STAT_COLUMNS:
        col = series(name)
        q25, q50, q75 = np.percentile(col, [25, 50, 75])
        columns[name] = ColumnStats(
            count=int(col.size),
            mean=float(col.mean()),
            std=float(col.std(ddof=1)) if col.size > 1 else 0.0,
            min=float(col.min()),
            q25=float(q25),
            q50=float(q50),
            q75=float(q75),
            max=float(col.max()),
        )
    return CatalogStats(columns=columns)
