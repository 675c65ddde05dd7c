/**
 * Export fidelity against the real multilingual encoder: the exported graph
 * must reproduce reference embeddings at cosine >= 0.9999 per sentence, and
 * the manifest must record the encoder's true output dimension (768 for the
 * default model). Needs the optional transformers.js dependency and either
 * network access or a primed cache, so the suite skips itself cleanly when
 * the encoder cannot load.
 */

import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { EncoderUnavailableError, TransformersEncoder } from "../src/encoders.js";
import { readLyreFile } from "../src/lyreFormat.js";
import { readManifest } from "../src/manifest.js";
import { exportGraph, loadReferenceSentences } from "../src/exportGraph.js";
import { normalizeSentence } from "../src/pooling.js";

const fixtures = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

async function encoderAvailable(): Promise<boolean> {
  try {
    await new TransformersEncoder().encode(["probe"]);
    return true;
  } catch (error) {
    if (error instanceof EncoderUnavailableError) {
      return false;
    }
    throw error;
  }
}

function cosine(a: Float32Array, b: Float32Array): number {
  let dot = 0;
  let normA = 0;
  let normB = 0;
  for (let i = 0; i < a.length; i += 1) {
    dot += a[i] * b[i];
    normA += a[i] * a[i];
    normB += b[i] * b[i];
  }
  return dot / Math.sqrt(normA * normB);
}

describe("export fidelity (needs the real encoder)", () => {
  it("exported graph reproduces reference embeddings at cosine >= 0.9999", async () => {
    if (!(await encoderAvailable())) {
      console.warn("real encoder unavailable (offline sandbox); skipping fidelity check");
      return;
    }
    const sentences = loadReferenceSentences(join(fixtures, "reference-sentences.txt"));
    expect(sentences).toHaveLength(100);
    const outDir = mkdtempSync(join(tmpdir(), "lyre-graph-"));
    const result = await exportGraph(undefined, outDir, sentences);

    const manifest = readManifest(result.manifestPath);
    expect(manifest.dimension).toBe(768);
    expect(manifest.checksum).toMatch(/^[0-9a-f]{64}$/);

    const reference = readLyreFile(result.referencePath);
    expect(reference.records).toHaveLength(100);
    expect(reference.dimension).toBe(manifest.dimension);

    // re-embed through a fresh encoder pointed at the exported cache
    const again = new TransformersEncoder(manifest.encoder, join(outDir, "cache"));
    const vectors = await again.encode(sentences);
    vectors.forEach((vector, i) => {
      const similarity = cosine(normalizeSentence(vector), reference.records[i].values);
      expect(similarity).toBeGreaterThanOrEqual(0.9999);
    });
  }, 600_000);
});
