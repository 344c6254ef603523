#!/usr/bin/env node
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { resolveEmbedBackend } from "./backends.js";
import { readProducts } from "./catalog.js";
import { EmbeddingRow, fileDigest, writeEmbeddingsFile, writeManifest } from "./interchange.js";

const DEFAULT_MODEL = "Xenova/all-mpnet-base-v2";
const USAGE =
  "usage: export-embeddings --in metadata.jsonl --out embeddings.jsonl" +
  ` [--model id] [--batch-size n]   (default model: ${DEFAULT_MODEL})`;

export async function main(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        out: { type: "string" },
        model: { type: "string", default: DEFAULT_MODEL },
        "batch-size": { type: "string", default: "32" },
      },
    });
  } catch (error) {
    console.error(error instanceof Error ? error.message : String(error));
    console.error(USAGE);
    return 2;
  }
  const inPath = parsed.values.in;
  const outPath = parsed.values.out;
  const model = parsed.values.model!;
  const batchSize = Number(parsed.values["batch-size"]);
  if (!inPath || !outPath || !Number.isInteger(batchSize) || batchSize < 1) {
    console.error(USAGE);
    return 2;
  }

  const products = readProducts(inPath);
  const backend = await resolveEmbedBackend(model);

  const rows: EmbeddingRow[] = [];
  let emptyDescriptions = 0;
  for (let i = 0; i < products.length; i += batchSize) {
    const batch = products.slice(i, i + batchSize);
    const vectors = await backend.embedBatch(batch.map((p) => p.description));
    batch.forEach((product, j) => {
      if (product.description === "") emptyDescriptions += 1;
      rows.push({ id: product.id, vec: vectors[j] });
    });
  }

  writeEmbeddingsFile(outPath, backend.name, backend.dim, rows);
  writeManifest(outPath, {
    model,
    dim: backend.dim,
    rows: rows.length,
    digest: fileDigest(outPath),
    emptyDescriptions,
  });
  console.log(`wrote ${rows.length} embedding row(s) to ${outPath} (dim ${backend.dim}, model ${model})`);
  return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (error) => {
      console.error(`error: ${error instanceof Error ? error.message : String(error)}`);
      process.exit(1);
    },
  );
}
