import crypto from "node:crypto";

import { SENTIMENT_LABELS } from "./interchange.js";

/** Embedding backend: maps texts to fixed-dimension vectors in batches. */
export interface EmbedBackend {
  name: string;
  dim: number;
  embedBatch(texts: string[]): Promise<number[][]>;
}

/** Sentiment backend: maps texts to normalized positive/negative scores. */
export interface SentimentBackend {
  name: string;
  scoreBatch(texts: string[]): Promise<Array<{ pos: number; neg: number }>>;
}

const TOKEN_RE = /[a-z0-9]+/g;

function tokenize(text: string): string[] {
  const tokens = text.toLowerCase().match(TOKEN_RE) ?? [];
  return tokens.filter((t) => t.length >= 2);
}

/**
 * Dependency-free deterministic embeddings: every token hashes to a
 * bucket and a sign, counts accumulate, and the result is L2-normalized.
 * A text with no tokens maps to the first basis vector so rows are always
 * unit length. Meant for fixtures and offline tests, not semantic quality.
 */
export function hashEmbedBackend(dim: number): EmbedBackend {
  if (!Number.isInteger(dim) || dim < 8) {
    throw new Error(`hash backend needs an integer dimension of at least 8, got ${dim}`);
  }
  return {
    name: `feature-hash-${dim}`,
    dim,
    async embedBatch(texts) {
      return texts.map((text) => {
        const vec = new Array<number>(dim).fill(0);
        for (const token of tokenize(text)) {
          const digest = crypto.createHash("sha256").update(token, "utf-8").digest();
          const bucket = digest.readUInt32BE(0) % dim;
          vec[bucket] += digest[4] & 1 ? 1 : -1;
        }
        const norm = Math.hypot(...vec);
        if (norm === 0) {
          vec[0] = 1;
          return vec;
        }
        return vec.map((v) => v / norm);
      });
    },
  };
}

const POSITIVE_WORDS = new Set([
  "amazing", "awesome", "best", "dependable", "easy", "effective", "efficient",
  "excellent", "fantastic", "fast", "flawless", "good", "great", "helpful",
  "intuitive", "love", "loved", "perfect", "perfectly", "pleasant", "powerful",
  "recommend", "recommended", "reliable", "responsive", "robust", "seamless",
  "simple", "smooth", "solid", "stable", "superb", "wonderful",
]);

const NEGATIVE_WORDS = new Set([
  "awful", "bad", "broken", "buggy", "clunky", "confusing", "crash", "crashed",
  "crashes", "disappointing", "disappointed", "fails", "failure", "frustrating",
  "horrible", "inaccurate", "refund", "slow", "sluggish", "terrible", "unreliable",
  "unstable", "unusable", "useless", "waste", "worst", "worthless",
]);

/**
 * Word-list sentiment scorer: with p positive and n negative hits the
 * score is (p/(p+n), n/(p+n)); no hits scores neutral (0.5, 0.5). The
 * hermetic stand-in for a zero-shot checkpoint.
 */
export function lexiconSentimentBackend(): SentimentBackend {
  return {
    name: "lexicon-sidecar-v1",
    async scoreBatch(texts) {
      return texts.map((text) => {
        let p = 0;
        let n = 0;
        for (const token of tokenize(text)) {
          if (POSITIVE_WORDS.has(token)) p += 1;
          else if (NEGATIVE_WORDS.has(token)) n += 1;
        }
        if (p + n === 0) return { pos: 0.5, neg: 0.5 };
        return { pos: p / (p + n), neg: n / (p + n) };
      });
    },
  };
}

// resolved at runtime so the build does not require the optional package
const TRANSFORMERS_MODULE = "@xenova/transformers";

async function loadTransformers(): Promise<any> {
  try {
    return await import(TRANSFORMERS_MODULE);
  } catch (error) {
    throw new Error(
      `cannot load @xenova/transformers (${String(error)}); ` +
        "install it to run transformer checkpoints, or use the built-in " +
        "hash:<dim> / lexicon models",
    );
  }
}

/** Mean-pooled, normalized sentence embeddings from a pretrained checkpoint. */
export async function transformerEmbedBackend(model: string): Promise<EmbedBackend> {
  const { pipeline } = await loadTransformers();
  const extractor = await pipeline("feature-extraction", model);
  // one probe inference pins the dimension before any batch runs
  const probe = await extractor("probe", { pooling: "mean", normalize: true });
  const dim = probe.dims[probe.dims.length - 1];
  return {
    name: model,
    dim,
    async embedBatch(texts) {
      if (texts.length === 0) return [];
      const output = await extractor(texts, { pooling: "mean", normalize: true });
      return output.tolist();
    },
  };
}

/** Zero-shot classification against the positive/negative label pair. */
export async function transformerSentimentBackend(model: string): Promise<SentimentBackend> {
  const { pipeline } = await loadTransformers();
  const classifier = await pipeline("zero-shot-classification", model);
  const labels = [...SENTIMENT_LABELS];
  return {
    name: model,
    async scoreBatch(texts) {
      const scores: Array<{ pos: number; neg: number }> = [];
      for (const text of texts) {
        if (!text.trim()) {
          scores.push({ pos: 0.5, neg: 0.5 }); // classifiers reject empty input
          continue;
        }
        const result = (await classifier(text, labels)) as {
          labels: string[];
          scores: number[];
        };
        const pos = result.scores[result.labels.indexOf("positive")];
        const neg = result.scores[result.labels.indexOf("negative")];
        scores.push({ pos, neg });
      }
      return scores;
    },
  };
}

/**
 * Pick the embedding backend for a model id. "hash:<dim>" selects the
 * built-in deterministic backend; anything else is treated as a
 * transformer checkpoint identifier.
 */
export async function resolveEmbedBackend(model: string): Promise<EmbedBackend> {
  const hashed = model.match(/^hash:(\d+)$/);
  if (hashed) return hashEmbedBackend(Number(hashed[1]));
  return transformerEmbedBackend(model);
}

/** Pick the sentiment backend for a model id ("lexicon" is built in). */
export async function resolveSentimentBackend(model: string): Promise<SentimentBackend> {
  if (model === "lexicon") return lexiconSentimentBackend();
  return transformerSentimentBackend(model);
}
