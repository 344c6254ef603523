#!/usr/bin/env node
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { resolveSentimentBackend } from "./backends.js";
import { readReviews } from "./catalog.js";
import {
  SENTIMENT_LABELS,
  SentimentRow,
  fileDigest,
  writeManifest,
  writeSentimentsFile,
} from "./interchange.js";

const DEFAULT_MODEL = "Xenova/bart-large-mnli";
const USAGE =
  "usage: export-sentiments --in reviews.jsonl --out sentiments.jsonl" +
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

  const reviews = readReviews(inPath);
  const backend = await resolveSentimentBackend(model);

  const rows: SentimentRow[] = [];
  for (let i = 0; i < reviews.length; i += batchSize) {
    const batch = reviews.slice(i, i + batchSize);
    const scores = await backend.scoreBatch(batch.map((r) => r.text));
    batch.forEach((review, j) => {
      rows.push({ review_id: review.reviewId, pos: scores[j].pos, neg: scores[j].neg });
    });
  }

  writeSentimentsFile(outPath, backend.name, rows);
  writeManifest(outPath, {
    model,
    labels: SENTIMENT_LABELS,
    rows: rows.length,
    digest: fileDigest(outPath),
  });
  console.log(`wrote ${rows.length} sentiment row(s) to ${outPath} (model ${model})`);
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
