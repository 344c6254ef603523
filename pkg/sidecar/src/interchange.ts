import crypto from "node:crypto";
import fs from "node:fs";

export const EMBEDDINGS_FORMAT = "llmrs-embeddings";
export const SENTIMENTS_FORMAT = "llmrs-sentiments";
export const SENTIMENT_LABELS = ["positive", "negative"] as const;
export const VERSION = 1;

export interface EmbeddingRow {
  id: string;
  vec: number[];
}

export interface SentimentRow {
  review_id: string;
  pos: number;
  neg: number;
}

/** Sidecar run receipt written next to each export. */
export interface ExportManifest {
  model: string;
  rows: number;
  digest: string;
  dim?: number;
  labels?: readonly string[];
  emptyDescriptions?: number;
}

/**
 * Write an embeddings interchange file: one header line carrying the
 * format name, version, dimension, and provider, then one row per id.
 */
export function writeEmbeddingsFile(
  path: string,
  provider: string,
  dim: number,
  rows: EmbeddingRow[],
): void {
  const lines = [JSON.stringify({ format: EMBEDDINGS_FORMAT, version: VERSION, dim, provider })];
  for (const row of rows) {
    lines.push(JSON.stringify({ id: row.id, vec: row.vec }));
  }
  fs.writeFileSync(path, lines.join("\n") + "\n");
}

/**
 * Write a sentiments interchange file. The scores emitted by this sidecar
 * are always normalized (pos + neg = 1), so the header says so.
 */
export function writeSentimentsFile(path: string, provider: string, rows: SentimentRow[]): void {
  const header = {
    format: SENTIMENTS_FORMAT,
    version: VERSION,
    labels: SENTIMENT_LABELS,
    provider,
    normalized: true,
  };
  const lines = [JSON.stringify(header)];
  for (const row of rows) {
    lines.push(JSON.stringify({ review_id: row.review_id, pos: row.pos, neg: row.neg }));
  }
  fs.writeFileSync(path, lines.join("\n") + "\n");
}

/** SHA-256 of a file's bytes, hex-encoded. */
export function fileDigest(path: string): string {
  return crypto.createHash("sha256").update(fs.readFileSync(path)).digest("hex");
}

/** Write the manifest as "<out>.manifest.json" and return its path. */
export function writeManifest(outPath: string, manifest: ExportManifest): string {
  const manifestPath = outPath + ".manifest.json";
  fs.writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + "\n");
  return manifestPath;
}
