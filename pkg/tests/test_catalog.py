import json

import pytest

from llmrs.catalog import (Product, descriptive_stats, ingest, load_store,
                           parse_price, simulate_costs, write_store)
from llmrs.errors import FormatError, StoreError
from llmrs.sentiment import ProductSentimentAggregate


class TestParsePrice:
    @pytest.mark.parametrize("raw,expected", [
        ("$39.99", 39.99),
        ("39.99", 39.99),
        ("$1,299.00", 1299.00),
        ("$ 12", 12.0),
        (25, 25.0),
        (25.5, 25.5),
        (0, 0.0),
    ])
    def test_accepted(self, raw, expected):
        assert parse_price(raw) == expected

    @pytest.mark.parametrize("raw", [
        None, "", "free", "$", "-3.00", -3, True, False, float("nan"),
        float("inf"), "1,23.00", [], {},
    ])
    def test_rejected(self, raw):
        assert parse_price(raw) is None


def _write_jsonl(path, rows):
    with path.open("w", encoding="utf-8") as f:
        for row in rows:
            f.write((row if isinstance(row, str) else json.dumps(row)) + "\n")


class TestIngest:
    def test_counts_and_linking(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        revs = tmp_path / "reviews.jsonl"
        _write_jsonl(meta, [
            {"asin": "A", "description": "alpha tool", "category": "Software", "price": "$10.00"},
            {"asin": "B", "description": ["beta", "suite"], "category": ["Soft", "Acct"], "price": "$20.00"},
            {"asin": "C", "description": "no price here", "category": "Software"},
        ])
        _write_jsonl(revs, [
            {"asin": "A", "reviewText": "good", "summary": "s", "overall": 5, "verified": True},
            {"asin": "A", "reviewText": "bad", "summary": "s", "overall": 1, "verified": False},
            {"asin": "B", "reviewText": "fine", "summary": "s", "overall": 3},
            {"asin": "C", "reviewText": "orphaned by price", "summary": "s", "overall": 4},
            {"asin": "ZZZ", "reviewText": "unknown product", "summary": "s", "overall": 4},
        ])
        result = ingest(meta, revs)
        assert result.counts["products"] == 2
        assert result.counts["products_excluded_no_price"] == 1
        assert result.counts["reviews_linked"] == 2 + 1
        assert result.counts["reviews_dropped"] == 2
        assert [p.id for p in result.products] == ["A", "B"]
        # multi-valued fields flatten: description joined, category leaf kept
        assert result.products[1].description == "beta suite"
        assert result.products[1].category == "Acct"

    def test_review_ids_number_by_product_encounter_order(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        revs = tmp_path / "reviews.jsonl"
        _write_jsonl(meta, [
            {"asin": "A", "description": "d", "category": "c", "price": "$1.00"},
            {"asin": "B", "description": "d", "category": "c", "price": "$1.00"},
        ])
        _write_jsonl(revs, [
            {"asin": "A", "reviewText": "r", "summary": "s", "overall": 5},
            {"asin": "B", "reviewText": "r", "summary": "s", "overall": 4},
            {"asin": "A", "reviewText": "r", "summary": "s", "overall": 3},
        ])
        result = ingest(meta, revs)
        assert [r.review_id for r in result.reviews] == ["A#0", "B#0", "A#1"]

    def test_malformed_review_still_consumes_its_ordinal(self, tmp_path):
        # Any id-bearing record advances the per-product counter, even if
        # the record is later dropped, so sidecar exports derived from the
        # raw reviews file line up with the engine's ids.
        meta = tmp_path / "metadata.jsonl"
        revs = tmp_path / "reviews.jsonl"
        _write_jsonl(meta, [{"asin": "A", "description": "d", "category": "c", "price": "$1.00"}])
        _write_jsonl(revs, [
            {"asin": "A", "reviewText": "ok", "summary": "s", "overall": 5},
            {"asin": "A", "reviewText": "bad rating", "summary": "s", "overall": 9},
            {"asin": "A", "reviewText": "ok again", "summary": "s", "overall": 4},
        ])
        result = ingest(meta, revs)
        assert [r.review_id for r in result.reviews] == ["A#0", "A#2"]
        assert result.counts["reviews_malformed"] == 1

    def test_duplicate_products_first_wins(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        revs = tmp_path / "reviews.jsonl"
        _write_jsonl(meta, [
            {"asin": "A", "description": "first", "category": "c", "price": "$1.00"},
            {"asin": "A", "description": "second", "category": "c", "price": "$2.00"},
        ])
        _write_jsonl(revs, [])
        result = ingest(meta, revs)
        assert len(result.products) == 1
        assert result.products[0].description == "first"
        assert result.counts["duplicate_products"] == 1

    def test_garbage_lines_counted_not_fatal(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        revs = tmp_path / "reviews.jsonl"
        _write_jsonl(meta, [
            "{not json",
            {"asin": "A", "description": "d", "category": "c", "price": "$1.00"},
        ])
        _write_jsonl(revs, ["also not json"])
        result = ingest(meta, revs)
        assert result.counts["metadata_malformed"] == 1
        assert result.counts["reviews_malformed"] == 1
        assert len(result.products) == 1

    def test_non_integral_or_boolean_rating_malformed(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        revs = tmp_path / "reviews.jsonl"
        _write_jsonl(meta, [{"asin": "A", "description": "d", "category": "c", "price": "$1.00"}])
        _write_jsonl(revs, [
            {"asin": "A", "reviewText": "r", "summary": "s", "overall": 4.5},
            {"asin": "A", "reviewText": "r", "summary": "s", "overall": True},
            {"asin": "A", "reviewText": "r", "summary": "s", "overall": 5.0},
        ])
        result = ingest(meta, revs)
        # 5.0 is integral and allowed; 4.5 and True are not
        assert result.counts["reviews_malformed"] == 2
        assert [r.review_id for r in result.reviews] == ["A#2"]
        assert result.reviews[0].rating == 5


class TestSimulateCosts:
    def test_costs_follow_category_minimum(self):
        products = [
            Product(id="A", description="d", category="HR", price=100.0),
            Product(id="B", description="d", category="HR", price=40.0),
            Product(id="C", description="d", category="CRM", price=10.0),
        ]
        out = simulate_costs(products)
        by_id = {p.id: p for p in out}
        # license fee = 0.8 * cheapest price in the category
        assert by_id["A"].license_fee == pytest.approx(0.8 * 40.0)
        assert by_id["B"].license_fee == pytest.approx(0.8 * 40.0)
        assert by_id["C"].license_fee == pytest.approx(0.8 * 10.0)
        # implementation = 0.5 * own price, maintenance = 0.01 * own price
        assert by_id["A"].implementation_cost == pytest.approx(50.0)
        assert by_id["A"].maintenance_cost == pytest.approx(1.0)

    def test_input_not_mutated(self):
        products = [Product(id="A", description="d", category="HR", price=100.0)]
        simulate_costs(products)
        assert products[0].license_fee is None


class TestStoreRoundTrip:
    def test_write_then_load(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        revs = tmp_path / "reviews.jsonl"
        _write_jsonl(meta, [
            {"asin": "A", "description": "alpha", "category": "c", "price": "$10.00"},
        ])
        _write_jsonl(revs, [
            {"asin": "A", "reviewText": "good stuff", "summary": "s", "overall": 5, "verified": True},
        ])
        result = ingest(meta, revs)
        store = tmp_path / "store"
        write_store(store, simulate_costs(result.products), result.reviews,
                    result.counts, params={"k": 5})
        catalog = load_store(store)
        assert set(catalog.products) == {"A"}
        assert catalog.products["A"].license_fee == pytest.approx(8.0)
        assert len(catalog.reviews) == 1
        assert catalog.reviews[0].review_id == "A#0"
        assert catalog.manifest["counts"] == result.counts

    def test_missing_store_dir(self, tmp_path):
        with pytest.raises(StoreError):
            load_store(tmp_path / "absent")

    def test_corrupt_products_file(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        revs = tmp_path / "reviews.jsonl"
        _write_jsonl(meta, [{"asin": "A", "description": "d", "category": "c", "price": "$1.00"}])
        _write_jsonl(revs, [])
        result = ingest(meta, revs)
        store = tmp_path / "store"
        write_store(store, simulate_costs(result.products), result.reviews,
                    result.counts, params={})
        (store / "products.jsonl").write_text("{broken\n")
        with pytest.raises(FormatError):
            load_store(store)


class TestDescriptiveStats:
    def test_hand_quartiles(self):
        products = [
            Product(id=f"P{i}", description="d", category="c", price=float(p),
                    license_fee=1.0, implementation_cost=1.0, maintenance_cost=1.0)
            for i, p in enumerate([1, 2, 3, 4])
        ]
        aggregates = {
            p.id: ProductSentimentAggregate(p.id, pos_sum=1.0, neg_sum=0.0, count=2)
            for p in products
        }
        stats = descriptive_stats(products, aggregates)
        price = stats.columns["price"]
        assert price.count == 4
        assert price.mean == pytest.approx(2.5)
        assert price.q50 == pytest.approx(2.5)
        assert price.min == 1.0 and price.max == 4.0
        assert stats.columns["num_reviews"].mean == pytest.approx(2.0)

    def test_products_without_scores_count_as_zero(self):
        products = [
            Product(id="A", description="d", category="c", price=1.0,
                    license_fee=1.0, implementation_cost=1.0, maintenance_cost=1.0),
            Product(id="B", description="d", category="c", price=3.0,
                    license_fee=1.0, implementation_cost=1.0, maintenance_cost=1.0),
        ]
        aggregates = {"A": ProductSentimentAggregate("A", 2.0, 1.0, 3)}
        stats = descriptive_stats(products, aggregates)
        assert stats.columns["num_reviews"].min == 0.0
        assert stats.columns["positive_score"].mean == pytest.approx(1.0)

    def test_empty_catalog_rejected(self):
        with pytest.raises(ValueError):
            descriptive_stats([], {})

    def test_single_product_std_is_zero(self):
        products = [Product(id="A", description="d", category="c", price=5.0,
                            license_fee=1.0, implementation_cost=1.0,
                            maintenance_cost=1.0)]
        stats = descriptive_stats(products, {})
        assert stats.columns["price"].std == 0.0
