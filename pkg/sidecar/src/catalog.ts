import fs from "node:fs";

export interface ProductText {
  id: string;
  description: string;
}

export interface ReviewText {
  reviewId: string;
  text: string;
}

function* jsonlObjects(path: string): Generator<Record<string, unknown>> {
  const content = fs.readFileSync(path, "utf-8");
  for (const line of content.split("\n")) {
    if (!line.trim()) continue;
    let record: unknown;
    try {
      record = JSON.parse(line);
    } catch {
      continue; // unparseable lines carry no id, so they cannot consume one
    }
    if (typeof record !== "object" || record === null || Array.isArray(record)) continue;
    yield record as Record<string, unknown>;
  }
}

function normalizeDescription(raw: unknown): string {
  if (typeof raw === "string") return raw.trim();
  if (Array.isArray(raw)) {
    return raw
      .filter((part): part is string => typeof part === "string" && part.trim() !== "")
      .map((part) => part.trim())
      .join(" ");
  }
  return "";
}

/**
 * Read product descriptions from a catalog metadata file.
 *
 * Mirrors the engine's ingestion where ids are concerned: records without
 * a non-empty string `asin` are skipped, the first record wins on
 * duplicate ids, and list-valued descriptions are joined with single
 * spaces. Products the engine later excludes (for example, no parseable
 * price) keep their row here; the engine's loaders accept supersets.
 */
export function readProducts(path: string): ProductText[] {
  const seen = new Set<string>();
  const products: ProductText[] = [];
  for (const record of jsonlObjects(path)) {
    const asin = record.asin;
    if (typeof asin !== "string" || asin === "") continue;
    if (seen.has(asin)) continue;
    seen.add(asin);
    products.push({ id: asin, description: normalizeDescription(record.description) });
  }
  return products;
}

/**
 * Read review texts keyed by the engine's "<product_id>#<ordinal>" ids.
 *
 * The ordinal counts id-bearing records per product in file order, and a
 * record consumes its ordinal even when it is skipped afterwards. This
 * matches the engine's ingestion exactly, so the ids emitted here are the
 * ids the engine looks up; rows for records the engine drops are simply
 * never requested.
 */
export function readReviews(path: string): ReviewText[] {
  const ordinals = new Map<string, number>();
  const reviews: ReviewText[] = [];
  for (const record of jsonlObjects(path)) {
    const asin = record.asin;
    if (typeof asin !== "string" || asin === "") continue;
    const ordinal = ordinals.get(asin) ?? 0;
    ordinals.set(asin, ordinal + 1);
    const text = record.reviewText ?? "";
    if (typeof text !== "string") continue; // the engine treats these as malformed
    reviews.push({ reviewId: `${asin}#${ordinal}`, text });
  }
  return reviews;
}
