/**
 * Precompute song embeddings for a corpus in the pipeline's JSONL schema,
 * writing a LYRE file plus a manifest and a sidecar listing skipped songs.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { SentenceEncoder } from "./encoders.js";
import { EmbeddingRecord, writeLyreFile } from "./lyreFormat.js";
import { ExportManifest, writeManifest } from "./manifest.js";
import { meanPool, normalizeSentence } from "./pooling.js";
import { DEFAULT_TOKEN_BUDGET, segment } from "./segment.js";

export interface CorpusRecord {
  id: string;
  lyrics: string;
}

export class CorpusSchemaError extends Error {}

export function readCorpusJsonl(path: string): CorpusRecord[] {
  const records: CorpusRecord[] = [];
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, index) => {
    if (!line.trim()) {
      return;
    }
    let parsed: Record<string, unknown>;
    try {
      parsed = JSON.parse(line) as Record<string, unknown>;
    } catch (error) {
      throw new CorpusSchemaError(`line ${index + 1}: invalid JSON (${String(error)})`);
    }
    for (const field of ["id", "lyrics"]) {
      if (typeof parsed[field] !== "string" || parsed[field] === "") {
        throw new CorpusSchemaError(`line ${index + 1}: missing field '${field}'`);
      }
    }
    records.push({ id: parsed.id as string, lyrics: parsed.lyrics as string });
  });
  return records;
}

export interface PrecomputeResult {
  written: number;
  skipped: { id: string; reason: string }[];
  dimension: number;
}

export async function precomputeCorpus(
  corpusPath: string,
  outPath: string,
  encoder: SentenceEncoder,
  tokenBudget: number = DEFAULT_TOKEN_BUDGET,
): Promise<PrecomputeResult> {
  const corpus = readCorpusJsonl(corpusPath);
  const embeddings: EmbeddingRecord[] = [];
  const skipped: { id: string; reason: string }[] = [];
  for (const record of corpus) {
    const chunks = segment(record.lyrics, tokenBudget);
    if (chunks.length === 0) {
      skipped.push({ id: record.id, reason: "no embeddable sentences" });
      continue;
    }
    const sentenceVectors = await encoder.encode(chunks.map((c) => c.text));
    embeddings.push({
      id: record.id,
      values: meanPool(sentenceVectors.map(normalizeSentence)),
    });
  }
  if (embeddings.length === 0) {
    throw new CorpusSchemaError("no records could be embedded");
  }
  const dimension = embeddings[0].values.length;
  writeLyreFile(outPath, embeddings);
  const manifest: ExportManifest = {
    encoder: encoder.name,
    version: 1,
    dimension,
    normalized: true,
    count: embeddings.length,
    createdAt: new Date().toISOString(),
  };
  writeManifest(manifestPathFor(outPath), manifest);
  writeFileSync(
    exclusionPathFor(outPath),
    skipped.map((s) => `${s.id}\t${s.reason}`).join("\n") + (skipped.length ? "\n" : ""),
    "utf-8",
  );
  return { written: embeddings.length, skipped, dimension };
}

export function manifestPathFor(outPath: string): string {
  return outPath.replace(/\.lyre$/, "") + ".manifest.json";
}

export function exclusionPathFor(outPath: string): string {
  return outPath + ".excluded.txt";
}
